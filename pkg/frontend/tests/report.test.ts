import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  applyPatchSuccess,
  buildReportView,
  handlePatchError,
  renderSectionHtml,
} from "../src/report.js";
import type { ReportPayload } from "../src/types.js";

const payload = JSON.parse(
  readFileSync(new URL("./fixtures/report.json", import.meta.url), "utf-8"),
) as ReportPayload;

describe("report view", () => {
  it("mirrors the API payload: status, section order, revisions", () => {
    const view = buildReportView(payload);
    expect(view.status).toBe(payload.status);
    expect(view.sections.map((s) => s.creditId)).toEqual(
      payload.sections.map((s) => s.credit_id),
    );
    expect(view.sections.map((s) => s.revision)).toEqual(
      payload.sections.map((s) => s.revision),
    );
  });

  it("a verified fixture report has no warning badges", () => {
    const view = buildReportView(payload);
    for (const section of view.sections) {
      expect(section.badges.mismatches).toBe(0);
      expect(section.badges.warning).toBeNull();
    }
  });

  it("a mismatch finding renders a warning badge with the claim detail", () => {
    const view = buildReportView({
      ...payload,
      status: "draft",
      sections: [
        {
          ...payload.sections[0],
          verification: [
            {
              claim_text: "9,999 kWh",
              verdict: "mismatch",
              store_path: "$.results.energymod.total_kwh",
              relative_error: 0.2,
            },
          ],
        },
      ],
    });
    const section = view.sections[0];
    expect(section.badges.mismatches).toBe(1);
    expect(section.badges.warning).toContain("9,999 kWh");
    expect(section.badges.warning).toContain("$.results.energymod.total_kwh");
    const html = renderSectionHtml(section);
    expect(html).toContain("badge-warning");
    expect(html).toContain("1 mismatch");
  });

  it("a successful edit bumps the revision badge and keeps the text", () => {
    const view = buildReportView(payload);
    const target = view.sections[0].creditId;
    const next = applyPatchSuccess(view, { credit_id: target, revision: 1 }, "Edited.");
    expect(next.sections[0].revision).toBe(1);
    expect(next.sections[0].text).toBe("Edited.");
    // other sections untouched
    expect(next.sections.slice(1)).toEqual(view.sections.slice(1));
  });

  it("a conflict on save prompts a reload and preserves the local draft", () => {
    const outcome = handlePatchError(
      { code: "conflict", message: "report regenerated", details: {} },
      "EAc2",
      "my unsaved edit",
    );
    expect(outcome).toMatchObject({
      kind: "reload-prompt",
      creditId: "EAc2",
      localDraft: "my unsaved edit",
    });
  });

  it("non-conflict errors pass through unchanged", () => {
    const error = { code: "not_found", message: "gone", details: {} };
    expect(handlePatchError(error, "EAc2", "draft")).toBe(error);
  });
});
