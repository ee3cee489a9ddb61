/** Thin typed client for the review API. All UI data flows through here;
 *  there is no direct file access and no client-side recomputation. */

import { parseEventLine } from "./progress.js";
import type {
  ApiError,
  ReportPayload,
  RunEvent,
  RunReport,
  SchemaEntry,
  ScorecardPayload,
} from "./types.js";
import type { ScenarioChange } from "./scenario.js";

export class ApiRequestError extends Error {
  constructor(public readonly status: number, public readonly payload: ApiError) {
    super(payload.message);
    this.name = "ApiRequestError";
  }
}

type Fetcher = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetcher: Fetcher = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetcher(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiRequestError(resp.status, payload as ApiError);
    }
    return payload as T;
  }

  listProjects(): Promise<{ projects: string[] }> {
    return this.request("GET", "/projects");
  }

  createProject(descriptor: Record<string, unknown>): Promise<{ project_id: string }> {
    return this.request("POST", "/projects", descriptor);
  }

  startRun(projectId: string): Promise<RunReport & { state: string }> {
    return this.request("POST", `/projects/${projectId}/runs`);
  }

  getRun(runId: string): Promise<RunReport> {
    return this.request("GET", `/runs/${runId}`);
  }

  async *streamEvents(runId: string): AsyncIterable<RunEvent> {
    const resp = await this.fetcher(`${this.baseUrl}/runs/${runId}/events`);
    if (!resp.ok) {
      throw new ApiRequestError(resp.status, (await resp.json()) as ApiError);
    }
    const text = await resp.text();
    for (const line of text.split("\n")) {
      if (line.trim().length > 0) {
        yield parseEventLine(line);
      }
    }
  }

  getScorecard(projectId: string, scenarioId?: string): Promise<ScorecardPayload> {
    const query = scenarioId ? `?scenario=${encodeURIComponent(scenarioId)}` : "";
    return this.request("GET", `/projects/${projectId}/scorecard${query}`);
  }

  getSchema(projectId: string): Promise<{ editable: SchemaEntry[] }> {
    return this.request("GET", `/projects/${projectId}/schema`);
  }

  createScenario(
    projectId: string,
    name: string,
    changes: ScenarioChange[],
  ): Promise<{ scenario_id: string; stale_tasks: string[] }> {
    return this.request("POST", `/projects/${projectId}/scenarios`, { name, changes });
  }

  runScenario(projectId: string, scenarioId: string): Promise<RunReport & { state: string }> {
    return this.request("POST", `/projects/${projectId}/scenarios/${scenarioId}/runs`);
  }

  getReport(projectId: string): Promise<ReportPayload> {
    return this.request("GET", `/projects/${projectId}/report`);
  }

  patchSection(
    projectId: string,
    creditId: string,
    text: string,
  ): Promise<{ credit_id: string; revision: number }> {
    return this.request("PATCH", `/projects/${projectId}/report/sections/${creditId}`, { text });
  }
}
