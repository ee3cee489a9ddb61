"""On-disk project lifecycle: creation, review runs, what-if scenarios,
and report revision history.

Layout per project: <root>/<project_id>/{store.json, runs/, scenarios/,
reports/}. A lock file serializes mutation per project.
"""
from __future__ import annotations

import json
import os
import re
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import datastore
from .config import Config
from .datastore import UnifiedStore, qty
from .orchestrator import Orchestrator, RunReport, build_task_graph, invalidate_downstream, write_run_log
from .review import PipelineContext, default_task_specs


class ProjectError(Exception):
    pass


class NotFoundError(ProjectError):
    pass


class ConflictError(ProjectError):
    pass


class ValidationError(ProjectError):
    def __init__(self, message: str, fields: Optional[list[str]] = None):
        super().__init__(message)
        self.fields = fields or []


@dataclass
class JobHandle:
    run_id: str
    project_id: str
    state: str  # queued | running | done | degraded | failed
    task_states: dict = field(default_factory=dict)


def _slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "project"


class ProjectManager:
    def __init__(self, root: str | Path, config: Optional[Config] = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config or Config()
        self._contexts: dict[str, PipelineContext] = {}

    # -- paths ---------------------------------------------------------

    def project_dir(self, project_id: str) -> Path:
        path = self.root / project_id
        if not path.is_dir():
            raise NotFoundError(f"unknown project: {project_id}")
        return path

    def store_path(self, project_id: str) -> Path:
        return self.project_dir(project_id) / "store.json"

    def load_store(self, project_id: str) -> UnifiedStore:
        return datastore.load(self.store_path(project_id).read_bytes())

    def save_store(self, project_id: str, store: UnifiedStore) -> None:
        self.store_path(project_id).write_bytes(datastore.persist(store))

    # -- creation --------------------------------------------------------

    def create_project(self, descriptor: dict) -> str:
        fields_bad: list[str] = []
        name = descriptor.get("name")
        if not name or not isinstance(name, str):
            fields_bad.append("name")
        area = descriptor.get("floor_area")
        if not isinstance(area, (int, float)) or isinstance(area, bool) or area <= 0:
            fields_bad.append("floor_area")
        stories = descriptor.get("stories")
        if not isinstance(stories, int) or stories < 1:
            fields_bad.append("stories")
        location = descriptor.get("location", {})
        if not (
            isinstance(location, dict)
            and -90 <= location.get("lat", 999) <= 90
            and -180 <= location.get("lon", 999) <= 180
        ):
            fields_bad.append("location")
        if fields_bad:
            raise ValidationError(
                f"invalid project descriptor fields: {', '.join(fields_bad)}", fields_bad
            )

        project_id = _slugify(name)
        path = self.root / project_id
        if path.exists():
            raise ConflictError(f"project name already in use: {name}")
        path.mkdir(parents=True)
        for sub in ("runs", "scenarios", "reports", "docs"):
            (path / sub).mkdir()

        store = UnifiedStore(
            project={
                "id": project_id,
                "name": name,
                "rating_system": descriptor.get("rating_system", "LEED v4 BD+C"),
                "floor_area": qty(float(area), "m2"),
                "stories": stories,
                "location": {"lat": location["lat"], "lon": location["lon"]},
            },
            inputs=descriptor.get("inputs", {}),
        )
        violations = datastore.validate_store(store)
        if violations:
            _rmtree(path)
            raise ValidationError("; ".join(str(v) for v in violations))
        self.save_store(project_id, store)
        return project_id

    def list_projects(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "store.json").is_file()
        )

    # -- locking -----------------------------------------------------------

    def _acquire_lock(self, project_id: str) -> Path:
        lock = self.project_dir(project_id) / ".lock"
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConflictError(f"a run is already active on project {project_id}")
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        return lock

    # -- review runs ---------------------------------------------------------

    def _context(self, project_id: str) -> PipelineContext:
        if project_id not in self._contexts:
            self._contexts[project_id] = PipelineContext(
                config=self.config, project_dir=self.project_dir(project_id)
            )
        return self._contexts[project_id]

    def run_review(
        self,
        project_id: str,
        scope: str = "full",
        scenario_id: Optional[str] = None,
        changed_paths: Optional[set[str]] = None,
    ) -> JobHandle:
        lock = self._acquire_lock(project_id)
        try:
            ctx = self._context(project_id)
            if scenario_id is not None:
                store = self.load_scenario_store(project_id, scenario_id)
            else:
                store = self.load_store(project_id)
            specs = default_task_specs(ctx)
            graph = build_task_graph(specs)
            if scope == "stale-only":
                stale = invalidate_downstream(graph, changed_paths or set())
                specs = _subgraph(specs, stale)
                graph = build_task_graph(specs)
            orch = Orchestrator(
                policy=self.config.retry, memory_threshold=self.config.memory_threshold
            )
            report, final = orch.execute_graph(graph, store, workers=self.config.workers)

            run_id = time.strftime("%Y%m%d-%H%M%S") + "-" + uuid.uuid4().hex[:6]
            runs_dir = self.project_dir(project_id) / "runs"
            write_run_log(orch.log_records, runs_dir / f"{run_id}.log")
            (runs_dir / f"{run_id}.report.json").write_text(
                json.dumps(_report_doc(report, run_id, project_id), sort_keys=True, indent=2),
                encoding="utf-8",
            )
            if scenario_id is not None:
                self.save_scenario_store(project_id, scenario_id, final)
            else:
                self.save_store(project_id, final)
                self._export_report(project_id, final)
            return JobHandle(
                run_id=run_id,
                project_id=project_id,
                state=_job_state(report),
                task_states={
                    tid: {"status": s.status.value, "attempts": s.attempts, "last_error": s.last_error}
                    for tid, s in report.states.items()
                },
            )
        finally:
            lock.unlink(missing_ok=True)

    def _export_report(self, project_id: str, store: UnifiedStore) -> None:
        markdown = store.query_path("$.results.reportgen.markdown")
        if isinstance(markdown, str):
            (self.project_dir(project_id) / "reports" / "report.md").write_text(
                markdown, encoding="utf-8"
            )

    def get_run(self, project_id: str, run_id: str) -> dict:
        path = self.project_dir(project_id) / "runs" / f"{run_id}.report.json"
        if not path.is_file():
            raise NotFoundError(f"unknown run: {run_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def run_events(self, project_id: str, run_id: str) -> list[dict]:
        path = self.project_dir(project_id) / "runs" / f"{run_id}.log"
        if not path.is_file():
            raise NotFoundError(f"unknown run: {run_id}")
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def list_runs(self, project_id: str) -> list[str]:
        runs_dir = self.project_dir(project_id) / "runs"
        return sorted(p.stem.replace(".report", "") for p in runs_dir.glob("*.report.json"))

    # -- scorecard / report access ---------------------------------------

    def get_scorecard(self, project_id: str, scenario_id: Optional[str] = None) -> dict:
        store = (
            self.load_scenario_store(project_id, scenario_id)
            if scenario_id
            else self.load_store(project_id)
        )
        detail = store.query_path("$.results.credits.scorecard_json")
        if not isinstance(detail, str):
            raise NotFoundError("no scorecard yet; run a review first")
        total = store.query_path("$.results.credits.total_points")
        coverage = store.query_path("$.results.credits.coverage_percent")
        targeted = store.query_path("$.results.credits.targeted")
        automated = store.query_path("$.results.credits.automated")
        gaps = store.query_path("$.results.credits.gaps_json")
        return {
            "credits": json.loads(detail),
            "total_points": total[0],
            "targeted": targeted[0],
            "automated": automated[0],
            "coverage_percent": coverage[0],
            "gaps": json.loads(gaps) if isinstance(gaps, str) else [],
        }

    def get_report(self, project_id: str) -> dict:
        store = self.load_store(project_id)
        sections_json = store.query_path("$.results.reportgen.sections_json")
        if not isinstance(sections_json, str):
            raise NotFoundError("no report yet; run a review first")
        sections = json.loads(sections_json)
        for section in sections:
            revisions = self._revisions(project_id, section["credit_id"])
            if revisions:
                section["text"] = revisions[-1]["text"]
            section["revision"] = len(revisions)
        return {
            "status": store.query_path("$.results.reportgen.status"),
            "sections": sections,
            "markdown": store.query_path("$.results.reportgen.markdown"),
        }

    def _revisions_path(self, project_id: str, credit_id: str) -> Path:
        return self.project_dir(project_id) / "reports" / f"{credit_id}.revisions.json"

    def _revisions(self, project_id: str, credit_id: str) -> list[dict]:
        path = self._revisions_path(project_id, credit_id)
        if not path.is_file():
            return []
        return json.loads(path.read_text(encoding="utf-8"))

    def patch_report_section(
        self, project_id: str, credit_id: str, text: str, author: str = "reviewer"
    ) -> dict:
        report = self.get_report(project_id)
        if not any(s["credit_id"] == credit_id for s in report["sections"]):
            raise NotFoundError(f"no report section for credit {credit_id}")
        revisions = self._revisions(project_id, credit_id)
        revisions.append(
            {"rev": len(revisions) + 1, "text": text, "author": author, "ts": time.time()}
        )
        self._revisions_path(project_id, credit_id).write_text(
            json.dumps(revisions, indent=2), encoding="utf-8"
        )
        return {"credit_id": credit_id, "revision": len(revisions)}

    # -- scenarios --------------------------------------------------------

    def apply_scenario(self, project_id: str, name: str, changes: list[dict]) -> dict:
        """Create an input overlay; the base store is never touched."""
        base = self.load_store(project_id)
        scenario_store = base.copy()
        changed_paths: set[str] = set()
        for change in changes:
            path = change["path"]
            if not path.startswith("$.inputs."):
                raise ValidationError(f"scenario may only edit input paths, got {path}")
            if not base.has_path(path):
                raise ValidationError(f"path not in input schema: {path}")
            _set_path(scenario_store, path, change["value"])
            changed_paths.add(path)

        scenario_id = _slugify(name)
        scen_dir = self.project_dir(project_id) / "scenarios" / scenario_id
        scen_dir.mkdir(parents=True, exist_ok=True)
        self.save_scenario_store(project_id, scenario_id, scenario_store)
        (scen_dir / "delta.json").write_text(
            json.dumps({"name": name, "changes": changes}, sort_keys=True, indent=2),
            encoding="utf-8",
        )
        graph = build_task_graph(default_task_specs(self._context(project_id)))
        stale = invalidate_downstream(graph, changed_paths)
        (scen_dir / "stale.json").write_text(json.dumps(sorted(stale)), encoding="utf-8")
        return {"scenario_id": scenario_id, "stale_tasks": sorted(stale)}

    def scenario_dir(self, project_id: str, scenario_id: str) -> Path:
        path = self.project_dir(project_id) / "scenarios" / scenario_id
        if not path.is_dir():
            raise NotFoundError(f"unknown scenario: {scenario_id}")
        return path

    def load_scenario_store(self, project_id: str, scenario_id: str) -> UnifiedStore:
        return datastore.load((self.scenario_dir(project_id, scenario_id) / "store.json").read_bytes())

    def save_scenario_store(self, project_id: str, scenario_id: str, store: UnifiedStore) -> None:
        (self.scenario_dir(project_id, scenario_id) / "store.json").write_bytes(
            datastore.persist(store)
        )

    def run_scenario(self, project_id: str, scenario_id: str) -> JobHandle:
        delta = json.loads(
            (self.scenario_dir(project_id, scenario_id) / "delta.json").read_text(encoding="utf-8")
        )
        changed = {c["path"] for c in delta["changes"]}
        return self.run_review(
            project_id, scope="stale-only" if changed else "full",
            scenario_id=scenario_id, changed_paths=changed,
        )


def _job_state(report: RunReport) -> str:
    return {"complete": "done", "degraded": "degraded", "failed": "failed"}[report.overall.value]


def _report_doc(report: RunReport, run_id: str, project_id: str) -> dict:
    return {
        "run_id": run_id,
        "project_id": project_id,
        "overall": report.overall.value,
        "store_hash": report.store_hash,
        "tasks": {
            tid: {"status": s.status.value, "attempts": s.attempts, "last_error": s.last_error}
            for tid, s in report.states.items()
        },
    }


def _subgraph(specs, keep: set[str]):
    kept = [s for s in specs if s.id in keep]
    ids = {s.id for s in kept}
    from dataclasses import replace

    return [replace(s, depends_on=frozenset(s.depends_on & ids)) for s in kept]


def _set_path(store: UnifiedStore, path: str, value) -> None:
    tokens = datastore.parse_path(path)
    target = {"project": store.project, "inputs": store.inputs, "results": store.results}[
        tokens[0]
    ]
    for tok in tokens[1:-1]:
        target = target[tok]
    existing = target[tokens[-1]]
    if datastore.is_quantity(existing):
        if isinstance(value, dict):
            if value.get("unit") != existing["unit"]:
                raise ValidationError(
                    f"unit mismatch at {path}: {value.get('unit')} vs {existing['unit']}"
                )
            target[tokens[-1]] = value
        else:
            target[tokens[-1]] = {"value": value, "unit": existing["unit"]}
    else:
        target[tokens[-1]] = value


def _rmtree(path: Path) -> None:
    import shutil

    shutil.rmtree(path, ignore_errors=True)
