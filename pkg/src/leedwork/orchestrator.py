"""Review manager: task-graph construction, parallel execution with
retries and graceful degradation, and staleness tracking for what-if
re-runs.

Tasks exchange data only through immutable store snapshots in and result
deltas out; the orchestrator alone merges deltas, in topological order
with lexicographic tie-break, so the final store is independent of the
worker count.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import psutil

from .datastore import UnifiedStore, merge_module_results, persist


class GraphError(Exception):
    """Invalid task graph (cycle or dangling dependency)."""


class TransientTaskError(Exception):
    """A retryable failure (network, engine unavailable)."""


class PermanentTaskError(Exception):
    """A non-retryable failure (validation, misconfiguration)."""


class TaskStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    SKIPPED = "skipped"
    STALE = "stale"


class RunOutcome(str, Enum):
    COMPLETE = "complete"
    DEGRADED = "degraded"
    FAILED = "failed"


@dataclass(frozen=True)
class TaskSpec:
    """One node of the analysis pipeline."""

    id: str
    module: str
    depends_on: frozenset[str] = frozenset()
    retryable: bool = True
    produces: frozenset[str] = frozenset()
    reads: frozenset[str] = frozenset()
    run: Optional[Callable[[UnifiedStore], dict]] = None


@dataclass
class TaskState:
    status: TaskStatus = TaskStatus.PENDING
    attempts: int = 0
    last_error: Optional[str] = None


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay: float = 0.5
    backoff_factor: float = 2.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_delay < 0:
            raise ValueError("base_delay must be >= 0")
        if self.backoff_factor < 1:
            raise ValueError("backoff_factor must be >= 1")


@dataclass
class RunReport:
    states: dict[str, TaskState]
    overall: RunOutcome
    store_hash: str


@dataclass
class TaskGraph:
    tasks: dict[str, TaskSpec]

    def dependents(self, task_id: str) -> set[str]:
        return {t.id for t in self.tasks.values() if task_id in t.depends_on}

    def ancestors(self, task_id: str) -> set[str]:
        seen: set[str] = set()
        frontier = set(self.tasks[task_id].depends_on)
        while frontier:
            seen |= frontier
            frontier = {
                d for tid in frontier for d in self.tasks[tid].depends_on
            } - seen
        return seen

    def descendants(self, roots: set[str]) -> set[str]:
        seen: set[str] = set()
        frontier = set(roots)
        while frontier:
            nxt: set[str] = set()
            for tid in frontier:
                for dep in self.dependents(tid):
                    if dep not in seen and dep not in roots:
                        seen.add(dep)
                        nxt.add(dep)
            frontier = nxt
        return seen

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with lexicographic tie-break."""
        indeg = {tid: len(spec.depends_on) for tid, spec in self.tasks.items()}
        ready = sorted(tid for tid, d in indeg.items() if d == 0)
        order: list[str] = []
        while ready:
            tid = ready.pop(0)
            order.append(tid)
            for dep in sorted(self.dependents(tid)):
                indeg[dep] -= 1
                if indeg[dep] == 0:
                    ready.append(dep)
            ready.sort()
        if len(order) != len(self.tasks):
            remaining = sorted(set(self.tasks) - set(order))
            raise GraphError(f"cycle among tasks: {', '.join(remaining)}")
        return order


def build_task_graph(specs: list[TaskSpec]) -> TaskGraph:
    """Validate acyclicity and reference integrity, returning the graph."""
    ids = {s.id for s in specs}
    if len(ids) != len(specs):
        raise GraphError("duplicate task ids")
    for spec in specs:
        dangling = spec.depends_on - ids
        if dangling:
            raise GraphError(
                f"task {spec.id!r} depends on undeclared tasks: {', '.join(sorted(dangling))}"
            )
    produced: dict[str, str] = {}
    for spec in specs:
        for path in spec.produces:
            if path in produced:
                raise GraphError(f"path {path} produced by both {produced[path]!r} and {spec.id!r}")
            produced[path] = spec.id
    graph = TaskGraph(tasks={s.id: s for s in specs})
    graph.topological_order()  # raises on cycles
    return graph


@dataclass(frozen=True)
class RetryDecision:
    retry: bool
    delay: float = 0.0


def apply_retry_policy(transient: bool, attempt: int, policy: RetryPolicy) -> RetryDecision:
    """Decide whether to retry a failed attempt and after what delay.

    Retries only transient failures with attempts remaining; delay grows
    geometrically: base_delay * backoff_factor**(attempt - 1).
    """
    if attempt < 1:
        raise ValueError("attempt must be >= 1")
    if transient and attempt < policy.max_attempts:
        return RetryDecision(True, policy.base_delay * policy.backoff_factor ** (attempt - 1))
    return RetryDecision(False)


def invalidate_downstream(graph: TaskGraph, changed_paths: set[str]) -> set[str]:
    """Tasks whose declared read paths intersect the change set, plus all
    their descendants."""
    if not changed_paths:
        return set()
    directly = {
        tid
        for tid, spec in graph.tasks.items()
        if any(_paths_touch(read, changed) for read in spec.reads for changed in changed_paths)
    }
    return directly | graph.descendants(directly)


def _paths_touch(a: str, b: str) -> bool:
    return a == b or a.startswith(b + ".") or b.startswith(a + ".")


def store_hash(store: UnifiedStore) -> str:
    return hashlib.sha256(persist(store)).hexdigest()


class MemoryWatchdog:
    """Soft admission control: pause launching new tasks while process
    memory exceeds the configured fraction of available system memory.
    Never interrupts running tasks."""

    def __init__(self, threshold: float = 0.70):
        if not 0 < threshold <= 1:
            raise ValueError("threshold must be in (0, 1]")
        self.threshold = threshold
        self.events: list[dict] = []

    def admit(self) -> bool:
        mem = psutil.virtual_memory()
        used_fraction = psutil.Process().memory_info().rss / max(mem.total, 1)
        if used_fraction > self.threshold:
            self.events.append({"event": "memory_pressure", "fraction": used_fraction})
            return False
        return True


class Orchestrator:
    """Executes a task graph over a store snapshot with a worker pool."""

    def __init__(
        self,
        policy: RetryPolicy = RetryPolicy(),
        memory_threshold: float = 0.70,
        sleep: Callable[[float], None] = time.sleep,
        log_sink: Optional[Callable[[dict], None]] = None,
    ):
        self.policy = policy
        self.watchdog = MemoryWatchdog(memory_threshold)
        self._sleep = sleep
        self._log_sink = log_sink
        self._log_lock = threading.Lock()
        self.log_records: list[dict] = []

    def _log(self, task_id: str, old: str, new: str, attempt: int) -> None:
        record = {
            "ts": time.time(),
            "task": task_id,
            "from": old,
            "to": new,
            "attempt": attempt,
        }
        with self._log_lock:
            self.log_records.append(record)
            if self._log_sink is not None:
                self._log_sink(record)

    def execute_graph(
        self,
        graph: TaskGraph,
        store: UnifiedStore,
        workers: int = 1,
    ) -> tuple[RunReport, UnifiedStore]:
        if workers < 1:
            raise ValueError("workers must be >= 1")
        order = graph.topological_order()
        states = {tid: TaskState() for tid in order}
        deltas: dict[str, dict] = {}
        done: set[str] = set()
        failed: set[str] = set()
        launched: set[str] = set()

        def runnable() -> list[str]:
            out = []
            for tid in order:
                if tid in launched or states[tid].status != TaskStatus.PENDING:
                    continue
                spec = graph.tasks[tid]
                if any(d in failed or states[d].status == TaskStatus.SKIPPED for d in spec.depends_on):
                    continue
                if all(d in done for d in spec.depends_on):
                    out.append(tid)
            return out

        def skip_descendants_of_failed() -> None:
            for tid in order:
                if states[tid].status != TaskStatus.PENDING:
                    continue
                bad = {
                    d
                    for d in graph.tasks[tid].depends_on
                    if states[d].status in (TaskStatus.FAILED, TaskStatus.SKIPPED)
                }
                if bad:
                    self._log(tid, states[tid].status.value, TaskStatus.SKIPPED.value, 0)
                    states[tid].status = TaskStatus.SKIPPED

        def snapshot_for(tid: str) -> UnifiedStore:
            # Initial store plus the deltas of all completed ancestors,
            # merged in global topological order for determinism.
            snap = store
            ancestors = graph.ancestors(tid)
            for seq, other in enumerate(order):
                if other in ancestors and other in deltas and deltas[other]:
                    snap = merge_module_results(
                        snap,
                        graph.tasks[other].module,
                        deltas[other],
                        task_id=f"{graph.tasks[other].module}:{other}",
                        stamp=f"{seq:04d}",
                    )
            return snap

        def run_task(tid: str) -> tuple[str, Optional[dict], Optional[str]]:
            spec = graph.tasks[tid]
            state = states[tid]
            snap = snapshot_for(tid)
            while True:
                state.attempts += 1
                try:
                    delta = spec.run(snap) if spec.run is not None else {}
                    return tid, delta, None
                except TransientTaskError as exc:
                    decision = apply_retry_policy(
                        spec.retryable, state.attempts, self.policy
                    )
                    if not decision.retry:
                        return tid, None, f"transient (gave up): {exc}"
                    self._log(tid, "running", "running", state.attempts + 1)
                    self._sleep(decision.delay)
                except PermanentTaskError as exc:
                    return tid, None, f"permanent: {exc}"
                except Exception as exc:  # unexpected => permanent
                    return tid, None, f"unexpected: {exc}"

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {}
            while True:
                skip_descendants_of_failed()
                for tid in runnable():
                    if len(futures) >= workers:
                        break
                    if not self.watchdog.admit():
                        break
                    launched.add(tid)
                    self._log(tid, TaskStatus.PENDING.value, TaskStatus.RUNNING.value, 1)
                    states[tid].status = TaskStatus.RUNNING
                    futures[pool.submit(run_task, tid)] = tid
                if not futures:
                    if not runnable():
                        break
                    self._sleep(0.05)  # memory pressure: wait before re-admitting
                    continue
                finished, _ = wait(futures, return_when=FIRST_COMPLETED)
                for fut in finished:
                    tid = futures.pop(fut)
                    _, delta, error = fut.result()
                    state = states[tid]
                    if error is None:
                        deltas[tid] = delta or {}
                        self._log(tid, TaskStatus.RUNNING.value, TaskStatus.COMPLETED.value, state.attempts)
                        state.status = TaskStatus.COMPLETED
                        done.add(tid)
                    else:
                        state.last_error = error
                        self._log(tid, TaskStatus.RUNNING.value, TaskStatus.FAILED.value, state.attempts)
                        state.status = TaskStatus.FAILED
                        failed.add(tid)
            skip_descendants_of_failed()

        # Deterministic serial merge: topological order, lexicographic ties.
        final = store
        for seq, tid in enumerate(order):
            if tid in deltas and deltas[tid]:
                final = merge_module_results(
                    final,
                    graph.tasks[tid].module,
                    deltas[tid],
                    task_id=f"{graph.tasks[tid].module}:{tid}",
                    stamp=f"{seq:04d}",
                )

        n_completed = sum(1 for s in states.values() if s.status == TaskStatus.COMPLETED)
        n_bad = sum(
            1 for s in states.values() if s.status in (TaskStatus.FAILED, TaskStatus.SKIPPED)
        )
        if n_bad == 0:
            overall = RunOutcome.COMPLETE
        elif n_completed > 0:
            overall = RunOutcome.DEGRADED
        else:
            overall = RunOutcome.FAILED

        report = RunReport(states=states, overall=overall, store_hash=store_hash(final))
        return report, final


def write_run_log(records: list[dict], path) -> None:
    """Persist state-transition records as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
