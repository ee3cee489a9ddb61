import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { buildScorecardViewModel, renderScorecardHtml } from "../src/scorecard.js";
import type { ScorecardPayload } from "../src/types.js";

const base = JSON.parse(
  readFileSync(new URL("./fixtures/scorecard_base.json", import.meta.url), "utf-8"),
) as ScorecardPayload;

describe("scorecard view model", () => {
  it("totals byte-match the API payload", () => {
    const vm = buildScorecardViewModel(base);
    // strict equality against the payload fields: no client-side recomputation
    expect(JSON.stringify(vm.totals)).toBe(
      JSON.stringify({
        total_points: base.total_points,
        targeted: base.targeted,
        automated: base.automated,
        coverage_percent: base.coverage_percent,
      }),
    );
  });

  it("has one row per credit, carrying the payload's points verbatim", () => {
    const vm = buildScorecardViewModel(base);
    expect(vm.rows).toHaveLength(Object.keys(base.credits).length);
    for (const row of vm.rows) {
      const cell = base.credits[row.creditId];
      expect(row.awarded).toBe(cell.awarded_points);
      expect(row.max).toBe(cell.max_points);
      expect(row.status).toBe(cell.status);
    }
  });

  it("sorts rows by category then credit id", () => {
    const vm = buildScorecardViewModel(base);
    const keys = vm.rows.map((r) => `${r.category}/${r.creditId}`);
    expect(keys).toEqual([...keys].sort());
  });

  it("attaches gap detail to the offending credit only", () => {
    const vm = buildScorecardViewModel(base);
    const gapped = vm.rows.filter((r) => r.gapSummary !== null);
    expect(gapped.map((r) => r.creditId).sort()).toEqual(
      [...new Set(base.gaps.map((g) => g.credit_id))].sort(),
    );
  });

  it("renders payload totals into the footer", () => {
    const html = renderScorecardHtml(buildScorecardViewModel(base));
    expect(html).toContain(`Total ${base.total_points} pts`);
    expect(html).toContain(`${base.coverage_percent}%`);
    expect(html).toContain(`(${base.automated}/${base.targeted})`);
  });

  it("escapes markup in credit names", () => {
    const payload: ScorecardPayload = {
      ...base,
      credits: {
        XXc1: {
          awarded_points: 0,
          category: "XX",
          kind: "credit",
          max_points: 1,
          missing_inputs: [],
          name: "<script>alert(1)</script>",
          status: "indeterminate",
        },
      },
      gaps: [],
    };
    const html = renderScorecardHtml(buildScorecardViewModel(payload));
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});
