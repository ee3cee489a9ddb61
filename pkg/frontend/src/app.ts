/** Browser bootstrap: wires the API client to the view models and renders
 *  into #app. Layout is deliberately plain; all behavior worth testing lives
 *  in the pure modules this file composes. */

import { ApiClient, ApiRequestError } from "./api.js";
import { buildScorecardViewModel, renderScorecardHtml, escapeHtml } from "./scorecard.js";
import { consumeRun, type BoardState } from "./progress.js";
import {
  applyApiValidationError,
  canSubmit,
  changesPayload,
  computeDelta,
  createForm,
  fieldErrors,
  setField,
  type ScenarioFormState,
} from "./scenario.js";
import {
  applyPatchSuccess,
  buildReportView,
  handlePatchError,
  renderSectionHtml,
  type ReportView,
} from "./report.js";

const api = new ApiClient("");

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function renderBoard(board: BoardState, notice: string | null): void {
  const tiles = Object.values(board.tiles)
    .map(
      (t) =>
        `<div class="tile tile-${t.status}"><strong>${t.task}</strong>` +
        `<span>${t.status}</span><span>attempts: ${t.attempts}</span>` +
        `${t.lastError ? `<span class="err">${escapeHtml(t.lastError)}</span>` : ""}</div>`,
    )
    .join("");
  el("board").innerHTML =
    (notice ? `<p class="notice">${escapeHtml(notice)}</p>` : "") +
    `<div class="tiles">${tiles}</div>` +
    (board.overall ? `<p>overall: <strong>${board.overall}</strong></p>` : "");
}

async function refreshScorecard(projectId: string): Promise<void> {
  const payload = await api.getScorecard(projectId);
  el("scorecard").innerHTML = renderScorecardHtml(buildScorecardViewModel(payload));
}

async function runProject(projectId: string): Promise<void> {
  const started = await api.startRun(projectId);
  await consumeRun(
    {
      stream: (runId) => api.streamEvents(runId),
      poll: (runId) => api.getRun(runId),
    },
    started.run_id,
    { onChange: (board) => renderBoard(board, null) },
  );
  await refreshScorecard(projectId);
  await refreshReport(projectId);
}

let reportView: ReportView | null = null;

async function refreshReport(projectId: string): Promise<void> {
  reportView = buildReportView(await api.getReport(projectId));
  el("report").innerHTML = reportView.sections.map(renderSectionHtml).join("\n");
}

async function saveSection(projectId: string, creditId: string, text: string): Promise<void> {
  if (!reportView) return;
  try {
    const result = await api.patchSection(projectId, creditId, text);
    reportView = applyPatchSuccess(reportView, result, text);
    el("report").innerHTML = reportView.sections.map(renderSectionHtml).join("\n");
  } catch (err) {
    if (err instanceof ApiRequestError) {
      const outcome = handlePatchError(err.payload, creditId, text);
      if ("kind" in outcome) {
        el("report-notice").textContent = outcome.message;
        return;
      }
    }
    throw err;
  }
}

let form: ScenarioFormState | null = null;

async function initScenarioForm(projectId: string): Promise<void> {
  const schema = await api.getSchema(projectId);
  form = createForm(schema.editable);
  const rows = schema.editable
    .map(
      (entry) =>
        `<label>${entry.path} <small>(${entry.unit ?? entry.type})</small>` +
        `<input data-path="${entry.path}" placeholder="${entry.type}">` +
        `<span class="field-error" data-error-for="${entry.path}"></span></label>`,
    )
    .join("");
  el("scenario-fields").innerHTML = rows;
  el("scenario-fields").addEventListener("input", (ev) => {
    const input = ev.target as HTMLInputElement;
    const path = input.dataset.path;
    if (!form || !path) return;
    form = setField(form, path, input.value);
    const errors = fieldErrors(form);
    for (const span of document.querySelectorAll<HTMLElement>(".field-error")) {
      span.textContent = errors.get(span.dataset.errorFor ?? "") ?? "";
    }
    (el("scenario-submit") as HTMLButtonElement).disabled = !canSubmit(form);
  });
  el("scenario-submit").addEventListener("click", () => submitScenario(projectId));
}

async function submitScenario(projectId: string): Promise<void> {
  if (!form || !canSubmit(form)) return;
  const name = (el("scenario-name") as HTMLInputElement).value || "What-if";
  try {
    const scen = await api.createScenario(projectId, name, changesPayload(form));
    await api.runScenario(projectId, scen.scenario_id);
    const [base, variant] = await Promise.all([
      api.getScorecard(projectId),
      api.getScorecard(projectId, scen.scenario_id),
    ]);
    const delta = computeDelta(base, variant);
    const lines = Object.entries(delta.byCategory)
      .map(([cat, d]) => `<li>${cat}: ${d > 0 ? "+" : ""}${d}</li>`)
      .join("");
    el("scenario-delta").innerHTML =
      `<p>total: ${delta.totalDelta > 0 ? "+" : ""}${delta.totalDelta} pts</p><ul>${lines}</ul>`;
  } catch (err) {
    if (err instanceof ApiRequestError && err.payload.code === "validation_error") {
      form = applyApiValidationError(form, err.payload.details);
      const errors = fieldErrors(form);
      for (const span of document.querySelectorAll<HTMLElement>(".field-error")) {
        span.textContent = errors.get(span.dataset.errorFor ?? "") ?? "";
      }
      return;
    }
    throw err;
  }
}

async function main(): Promise<void> {
  const { projects } = await api.listProjects();
  el("projects").innerHTML = projects
    .map((p) => `<button data-project="${p}">${p}</button>`)
    .join("");
  el("projects").addEventListener("click", async (ev) => {
    const pid = (ev.target as HTMLElement).dataset.project;
    if (!pid) return;
    await initScenarioForm(pid);
    (el("run") as HTMLButtonElement).onclick = () => runProject(pid);
    try {
      await refreshScorecard(pid);
      await refreshReport(pid);
    } catch {
      // no run yet; panels stay empty until the first run
    }
  });
}

if (typeof document !== "undefined") {
  main().catch((err) => {
    console.error(err);
  });
}

export { renderBoard, saveSection };
