/** What-if scenario editor state. Only paths whitelisted by the API schema
 *  endpoint are editable; values are validated client-side so an invalid
 *  entry renders an inline field error and never reaches the network.
 *  Submit is disabled while the dirty set is empty. */

import type { SchemaEntry, ScorecardPayload } from "./types.js";

export interface FieldState {
  entry: SchemaEntry;
  raw: string;
  value: number | boolean | string | null;
  error: string | null;
}

export interface ScenarioFormState {
  fields: Map<string, FieldState>;
  dirty: Set<string>;
}

export function createForm(schema: SchemaEntry[]): ScenarioFormState {
  const fields = new Map<string, FieldState>();
  for (const entry of schema) {
    fields.set(entry.path, { entry, raw: "", value: null, error: null });
  }
  return { fields, dirty: new Set() };
}

/** Set a field from raw user input. Unknown paths are rejected outright. */
export function setField(form: ScenarioFormState, path: string, raw: string): ScenarioFormState {
  const field = form.fields.get(path);
  if (!field) {
    throw new Error(`path is not editable: ${path}`);
  }
  const next: ScenarioFormState = {
    fields: new Map(form.fields),
    dirty: new Set(form.dirty),
  };
  const parsed = parseRaw(field.entry, raw);
  next.fields.set(path, { entry: field.entry, raw, ...parsed });
  if (raw.trim() === "") {
    next.dirty.delete(path);
  } else {
    next.dirty.add(path);
  }
  return next;
}

function parseRaw(
  entry: SchemaEntry,
  raw: string,
): { value: number | boolean | string | null; error: string | null } {
  const text = raw.trim();
  if (text === "") {
    return { value: null, error: null };
  }
  switch (entry.type) {
    case "number": {
      const unit = entry.unit ?? "1";
      const unitless = text.replace(new RegExp(`\\s*${escapeRegExp(unit)}$`), "");
      if (unitless !== text && unit !== "1") {
        // a trailing matching unit is tolerated, anything else is an error
        return parseNumber(unitless, entry);
      }
      return parseNumber(text, entry);
    }
    case "boolean":
      if (text === "true" || text === "yes") return { value: true, error: null };
      if (text === "false" || text === "no") return { value: false, error: null };
      return { value: null, error: "expected true/false" };
    case "string":
      return { value: text, error: null };
  }
}

function parseNumber(
  text: string,
  entry: SchemaEntry,
): { value: number | null; error: string | null } {
  const value = Number(text);
  if (!Number.isFinite(value)) {
    const unit = entry.unit ?? "1";
    return {
      value: null,
      error: `expected a number${unit !== "1" ? ` in ${unit}` : ""}`,
    };
  }
  return { value, error: null };
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

export function fieldErrors(form: ScenarioFormState): Map<string, string> {
  const errors = new Map<string, string>();
  for (const path of form.dirty) {
    const field = form.fields.get(path);
    if (field?.error) {
      errors.set(path, field.error);
    }
  }
  return errors;
}

export function canSubmit(form: ScenarioFormState): boolean {
  return form.dirty.size > 0 && fieldErrors(form).size === 0;
}

export interface ScenarioChange {
  path: string;
  value: number | boolean | string;
}

/** The request body for POST /projects/{id}/scenarios. */
export function changesPayload(form: ScenarioFormState): ScenarioChange[] {
  if (!canSubmit(form)) {
    throw new Error("form is not submittable");
  }
  return [...form.dirty].sort().map((path) => {
    const field = form.fields.get(path)!;
    return { path, value: field.value! };
  });
}

export interface ScoreDelta {
  totalDelta: number;
  byCategory: Record<string, number>;
  byCredit: Record<string, number>;
}

/**
 * Difference between two API scorecards (scenario minus base). Purely a
 * subtraction of server-computed payloads; no points are recomputed here.
 */
export function computeDelta(base: ScorecardPayload, scenario: ScorecardPayload): ScoreDelta {
  const byCategory: Record<string, number> = {};
  const byCredit: Record<string, number> = {};
  const ids = new Set([...Object.keys(base.credits), ...Object.keys(scenario.credits)]);
  for (const id of ids) {
    const before = base.credits[id]?.awarded_points ?? 0;
    const after = scenario.credits[id]?.awarded_points ?? 0;
    const category = (scenario.credits[id] ?? base.credits[id]).category;
    if (after !== before) {
      byCredit[id] = after - before;
      byCategory[category] = (byCategory[category] ?? 0) + (after - before);
    }
  }
  return {
    totalDelta: scenario.total_points - base.total_points,
    byCategory,
    byCredit,
  };
}

/** Map an API validation error onto the offending form fields. */
export function applyApiValidationError(
  form: ScenarioFormState,
  details: Record<string, unknown>,
): ScenarioFormState {
  const fields = Array.isArray(details.fields) ? (details.fields as string[]) : [];
  const next: ScenarioFormState = { fields: new Map(form.fields), dirty: new Set(form.dirty) };
  for (const path of fields) {
    const field = next.fields.get(path);
    if (field) {
      next.fields.set(path, { ...field, error: "rejected by the server" });
    }
  }
  return next;
}
