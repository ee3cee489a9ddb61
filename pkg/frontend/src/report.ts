/** Report review/editing view. Each section shows its revision count and
 *  verification badges; a conflicting concurrent edit produces a reload
 *  prompt that keeps the local draft text. */

import { escapeHtml } from "./scorecard.js";
import type { ApiError, ReportPayload, ReportSection, VerificationFinding } from "./types.js";

export interface SectionBadges {
  passes: number;
  mismatches: number;
  unmatched: number;
  /** Rendered beside any section that has at least one mismatch finding. */
  warning: string | null;
}

export interface SectionView {
  creditId: string;
  text: string;
  revision: number;
  badges: SectionBadges;
  findings: VerificationFinding[];
}

export interface ReportView {
  status: "verified" | "draft";
  sections: SectionView[];
}

export function buildReportView(payload: ReportPayload): ReportView {
  return {
    status: payload.status,
    sections: payload.sections.map(sectionView),
  };
}

function sectionView(section: ReportSection): SectionView {
  const mismatches = section.verification.filter((f) => f.verdict === "mismatch");
  return {
    creditId: section.credit_id,
    text: section.text,
    revision: section.revision,
    badges: {
      passes: section.verification.filter((f) => f.verdict === "pass").length,
      mismatches: mismatches.length,
      unmatched: section.verification.filter((f) => f.verdict === "unmatched").length,
      warning: mismatches.length
        ? mismatches.map((f) => `"${f.claim_text}" disagrees with ${f.store_path}`).join("; ")
        : null,
    },
    findings: section.verification,
  };
}

/** Successful PATCH: bump the revision badge and adopt the saved text. */
export function applyPatchSuccess(
  view: ReportView,
  result: { credit_id: string; revision: number },
  savedText: string,
): ReportView {
  return {
    ...view,
    sections: view.sections.map((s) =>
      s.creditId === result.credit_id ? { ...s, revision: result.revision, text: savedText } : s,
    ),
  };
}

export interface ConflictPrompt {
  kind: "reload-prompt";
  creditId: string;
  message: string;
  /** The operator's unsaved edit, preserved for re-application after reload. */
  localDraft: string;
}

/** Failed PATCH: a conflict (report regenerated mid-edit) prompts a reload
 *  without losing the draft; anything else is surfaced as-is. */
export function handlePatchError(
  error: ApiError,
  creditId: string,
  localDraft: string,
): ConflictPrompt | ApiError {
  if (error.code === "conflict") {
    return {
      kind: "reload-prompt",
      creditId,
      message: `${error.message} — reload the report, your draft is kept`,
      localDraft,
    };
  }
  return error;
}

export function renderSectionHtml(section: SectionView): string {
  const badge =
    section.badges.mismatches > 0
      ? `<span class="badge badge-warning" title="${escapeHtml(section.badges.warning ?? "")}">` +
        `⚠ ${section.badges.mismatches} mismatch</span>`
      : `<span class="badge badge-ok">✓ ${section.badges.passes} verified</span>`;
  return `<section class="report-section" data-credit="${section.creditId}">
<h3>${section.creditId} <span class="badge">rev ${section.revision}</span> ${badge}</h3>
<p>${escapeHtml(section.text)}</p>
</section>`;
}
