import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  applyApiValidationError,
  canSubmit,
  changesPayload,
  computeDelta,
  createForm,
  fieldErrors,
  setField,
} from "../src/scenario.js";
import type { SchemaEntry, ScorecardPayload } from "../src/types.js";

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf-8"),
  ) as T;
}

const schema = fixture<{ editable: SchemaEntry[] }>("schema.json").editable;
const base = fixture<ScorecardPayload>("scorecard_base.json");
const wwr = fixture<ScorecardPayload>("scorecard_wwr.json");

describe("scenario form", () => {
  it("submit is disabled while the dirty set is empty", () => {
    const form = createForm(schema);
    expect(canSubmit(form)).toBe(false);
    expect(() => changesPayload(form)).toThrow();
  });

  it("a valid numeric edit enables submit and builds the request body", () => {
    let form = createForm(schema);
    form = setField(form, "$.inputs.building.wwr", "0.3");
    expect(canSubmit(form)).toBe(true);
    expect(changesPayload(form)).toEqual([{ path: "$.inputs.building.wwr", value: 0.3 }]);
  });

  it("clearing a field removes it from the dirty set again", () => {
    let form = createForm(schema);
    form = setField(form, "$.inputs.building.wwr", "0.3");
    form = setField(form, "$.inputs.building.wwr", "");
    expect(canSubmit(form)).toBe(false);
  });

  it("an invalid unit entry yields an inline field error and blocks submit", () => {
    let form = createForm(schema);
    form = setField(form, "$.inputs.building.wwr", "0.3 m2");
    expect(canSubmit(form)).toBe(false);
    expect(fieldErrors(form).get("$.inputs.building.wwr")).toMatch(/number/);
  });

  it("only schema-whitelisted paths are editable", () => {
    const form = createForm(schema);
    expect(() => setField(form, "$.results.credits.total_points", "99")).toThrow(
      /not editable/,
    );
  });

  it("boolean fields accept true/false and reject anything else", () => {
    let form = createForm(schema);
    form = setField(form, "$.inputs.building.ventilation_ok", "true");
    expect(changesPayload(form)).toEqual([
      { path: "$.inputs.building.ventilation_ok", value: true },
    ]);
    form = setField(form, "$.inputs.building.ventilation_ok", "maybe");
    expect(canSubmit(form)).toBe(false);
  });

  it("server-side validation errors land on the offending fields", () => {
    let form = createForm(schema);
    form = setField(form, "$.inputs.building.wwr", "0.3");
    form = applyApiValidationError(form, { fields: ["$.inputs.building.wwr"] });
    expect(fieldErrors(form).get("$.inputs.building.wwr")).toMatch(/server/);
    expect(canSubmit(form)).toBe(false);
  });
});

describe("what-if delta view", () => {
  it("equals the API scorecard difference for the bundled WWR scenario", () => {
    const delta = computeDelta(base, wwr);
    expect(delta.totalDelta).toBe(wwr.total_points - base.total_points);
    // per-credit deltas are exactly the per-credit payload differences
    for (const [id, d] of Object.entries(delta.byCredit)) {
      expect(d).toBe(wwr.credits[id].awarded_points - base.credits[id].awarded_points);
    }
    // and category sums add up to the total delta
    const categorySum = Object.values(delta.byCategory).reduce((a, b) => a + b, 0);
    expect(categorySum).toBe(delta.totalDelta);
  });

  it("the WWR reduction costs the daylight credit", () => {
    const delta = computeDelta(base, wwr);
    expect(delta.byCredit.EQc1).toBe(-2);
    expect(delta.byCategory.EQ).toBe(-2);
    expect(delta.totalDelta).toBe(-2);
  });

  it("identical scorecards produce an empty delta", () => {
    const delta = computeDelta(base, base);
    expect(delta.totalDelta).toBe(0);
    expect(delta.byCredit).toEqual({});
    expect(delta.byCategory).toEqual({});
  });
});
