/** Payload shapes of the review API. These mirror the server responses; the
 *  UI never derives compliance numbers itself, it only rearranges these. */

export type CreditStatus = "achieved" | "not_achieved" | "indeterminate" | "blocked";

export interface CreditCell {
  awarded_points: number;
  category: string;
  kind: "prerequisite" | "credit";
  max_points: number;
  missing_inputs: string[];
  name: string;
  status: CreditStatus;
}

export interface GapRecord {
  credit_id: string;
  detail: string;
  type: string;
}

export interface ScorecardPayload {
  credits: Record<string, CreditCell>;
  total_points: number;
  targeted: number;
  automated: number;
  coverage_percent: number;
  gaps: GapRecord[];
}

export type TaskStatus = "pending" | "running" | "completed" | "failed" | "skipped";

export interface TransitionEvent {
  task: string;
  from: TaskStatus;
  to: TaskStatus;
  attempt: number;
  ts: number;
}

export interface TaskSummary {
  status: TaskStatus;
  attempts: number;
  last_error: string | null;
}

export interface TerminalEvent {
  terminal: true;
  overall: string;
  tasks: Record<string, TaskSummary>;
}

export type RunEvent = TransitionEvent | TerminalEvent;

export interface RunReport {
  run_id: string;
  project_id: string;
  overall: string;
  store_hash: string;
  tasks: Record<string, TaskSummary>;
}

export interface SchemaEntry {
  path: string;
  type: "number" | "boolean" | "string";
  unit: string | null;
}

export interface VerificationFinding {
  claim_text: string;
  verdict: "pass" | "mismatch" | "unmatched";
  store_path: string | null;
  relative_error: number | null;
}

export interface ReportSection {
  credit_id: string;
  text: string;
  model_id: string | null;
  provenance: string[];
  revision: number;
  verification: VerificationFinding[];
}

export interface ReportPayload {
  status: "verified" | "draft";
  sections: ReportSection[];
  markdown: string;
}

export interface ApiError {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export function isTerminal(event: RunEvent): event is TerminalEvent {
  return "terminal" in event && event.terminal === true;
}
