/** Scorecard view model. Totals are copied verbatim from the API payload —
 *  the client never recomputes points — and rows are grouped for display. */

import type { CreditStatus, ScorecardPayload } from "./types.js";

export interface ScorecardRow {
  creditId: string;
  category: string;
  kind: string;
  name: string;
  status: CreditStatus;
  awarded: number;
  max: number;
  gapSummary: string | null;
}

export interface ScorecardTotals {
  total_points: number;
  targeted: number;
  automated: number;
  coverage_percent: number;
}

export interface ScorecardViewModel {
  rows: ScorecardRow[];
  totals: ScorecardTotals;
}

const STATUS_BADGE: Record<CreditStatus, string> = {
  achieved: "✓",
  not_achieved: "✗",
  indeterminate: "?",
  blocked: "⛔",
};

export function buildScorecardViewModel(payload: ScorecardPayload): ScorecardViewModel {
  const gapByCredit = new Map<string, string>();
  for (const gap of payload.gaps) {
    const prior = gapByCredit.get(gap.credit_id);
    gapByCredit.set(gap.credit_id, prior ? `${prior}; ${gap.detail}` : gap.detail);
  }
  const rows = Object.entries(payload.credits)
    .map(([creditId, cell]) => ({
      creditId,
      category: cell.category,
      kind: cell.kind,
      name: cell.name,
      status: cell.status,
      awarded: cell.awarded_points,
      max: cell.max_points,
      gapSummary: gapByCredit.get(creditId) ?? null,
    }))
    .sort((a, b) =>
      a.category === b.category
        ? a.creditId.localeCompare(b.creditId)
        : a.category.localeCompare(b.category),
    );
  return {
    rows,
    totals: {
      total_points: payload.total_points,
      targeted: payload.targeted,
      automated: payload.automated,
      coverage_percent: payload.coverage_percent,
    },
  };
}

export function renderScorecardHtml(vm: ScorecardViewModel): string {
  const body = vm.rows
    .map(
      (r) => `<tr class="status-${r.status}">
  <td>${r.category}</td><td>${r.creditId}</td><td>${escapeHtml(r.name)}</td>
  <td>${STATUS_BADGE[r.status]}</td><td>${r.awarded} / ${r.max}</td>
  <td>${r.gapSummary ? escapeHtml(r.gapSummary) : ""}</td>
</tr>`,
    )
    .join("\n");
  return `<table class="scorecard">
<thead><tr><th>Cat</th><th>Credit</th><th>Name</th><th>Status</th><th>Points</th><th>Gap</th></tr></thead>
<tbody>
${body}
</tbody>
<tfoot><tr>
  <td colspan="4">Total ${vm.totals.total_points} pts — automation coverage ${vm.totals.coverage_percent}% (${vm.totals.automated}/${vm.totals.targeted})</td>
  <td colspan="2"></td>
</tr></tfoot>
</table>`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
