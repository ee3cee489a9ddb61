/** Live task board. Board state is a pure function of the event sequence
 *  consumed so far; transport concerns (stream vs. polling) live in
 *  ProgressConsumer and never leak into the reducer. */

import { isTerminal } from "./types.js";
import type { RunEvent, RunReport, TaskStatus, TaskSummary } from "./types.js";

export interface BoardTile {
  task: string;
  status: TaskStatus;
  attempts: number;
  lastError: string | null;
}

export interface BoardState {
  tiles: Record<string, BoardTile>;
  overall: string | null;
  terminal: boolean;
}

export function initialBoard(tasks: string[] = []): BoardState {
  const tiles: Record<string, BoardTile> = {};
  for (const task of tasks) {
    tiles[task] = { task, status: "pending", attempts: 0, lastError: null };
  }
  return { tiles, overall: null, terminal: false };
}

/** Pure reducer: returns a new state, never mutates the input. */
export function reduceEvent(state: BoardState, event: RunEvent): BoardState {
  if (state.terminal) {
    return state; // terminal event stops consumption
  }
  if (isTerminal(event)) {
    const tiles: Record<string, BoardTile> = {};
    for (const [task, summary] of Object.entries(event.tasks)) {
      tiles[task] = toTile(task, summary);
    }
    return { tiles, overall: event.overall, terminal: true };
  }
  const prior = state.tiles[event.task];
  return {
    ...state,
    tiles: {
      ...state.tiles,
      [event.task]: {
        task: event.task,
        status: event.to,
        attempts: Math.max(event.attempt, prior?.attempts ?? 0),
        lastError: prior?.lastError ?? null,
      },
    },
  };
}

export function replayEvents(events: RunEvent[], tasks: string[] = []): BoardState {
  return events.reduce(reduceEvent, initialBoard(tasks));
}

const TERMINAL_OUTCOMES = new Set(["complete", "degraded", "failed"]);

export function boardFromRunReport(report: RunReport): BoardState {
  const tiles: Record<string, BoardTile> = {};
  for (const [task, summary] of Object.entries(report.tasks)) {
    tiles[task] = toTile(task, summary);
  }
  return {
    tiles,
    overall: report.overall,
    terminal: TERMINAL_OUTCOMES.has(report.overall),
  };
}

function toTile(task: string, summary: TaskSummary): BoardTile {
  return {
    task,
    status: summary.status,
    attempts: summary.attempts,
    lastError: summary.last_error,
  };
}

/** A skipped task is flagged with the failed ancestor that caused it. */
export function skippedAnnotations(state: BoardState): Record<string, string> {
  const failed = Object.values(state.tiles)
    .filter((t) => t.status === "failed")
    .map((t) => t.task);
  const notes: Record<string, string> = {};
  for (const tile of Object.values(state.tiles)) {
    if (tile.status === "skipped") {
      notes[tile.task] = failed.length
        ? `skipped: upstream failure in ${failed.join(", ")}`
        : "skipped";
    }
  }
  return notes;
}

export interface ProgressTransport {
  /** Ordered NDJSON events; may throw or end early on a dropped stream. */
  stream(runId: string): AsyncIterable<RunEvent>;
  /** Poll endpoint snapshot of the run. */
  poll(runId: string): Promise<RunReport>;
}

export interface ConsumeResult {
  board: BoardState;
  usedPollingFallback: boolean;
  reconnectNotice: string | null;
}

/**
 * Consume a run's events until the terminal record. If the stream drops
 * before reaching it, fall back to polling (default interval 1 s) until the
 * run report is terminal, surfacing a reconnect notice for the UI.
 */
export async function consumeRun(
  transport: ProgressTransport,
  runId: string,
  options: {
    tasks?: string[];
    pollIntervalMs?: number;
    sleep?: (ms: number) => Promise<void>;
    onChange?: (board: BoardState) => void;
  } = {},
): Promise<ConsumeResult> {
  const interval = options.pollIntervalMs ?? 1000;
  const sleep = options.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  let board = initialBoard(options.tasks ?? []);
  const emit = () => options.onChange?.(board);
  emit();

  let dropped: string | null = null;
  try {
    for await (const event of transport.stream(runId)) {
      board = reduceEvent(board, event);
      emit();
      if (board.terminal) {
        return { board, usedPollingFallback: false, reconnectNotice: null };
      }
    }
    dropped = "event stream ended before the terminal record";
  } catch (err) {
    dropped = `event stream dropped: ${err instanceof Error ? err.message : String(err)}`;
  }

  // Poll until the run report says the run is over; board converges to it.
  for (;;) {
    const report = await transport.poll(runId);
    board = boardFromRunReport(report);
    emit();
    if (board.terminal) {
      return { board, usedPollingFallback: true, reconnectNotice: dropped };
    }
    await sleep(interval);
  }
}

export function parseEventLine(line: string): RunEvent {
  return JSON.parse(line) as RunEvent;
}

export function parseEventLog(ndjson: string): RunEvent[] {
  return ndjson
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map(parseEventLine);
}
