"""HTTP service over the project manager.

Endpoints (all JSON bodies; errors as {code, message, details}):
  POST /projects                      create a project
  POST /projects/{id}/runs            start a review run (blocking)
  GET  /runs/{run_id}                 poll a run report
  GET  /runs/{run_id}/events          stream the run's event log
  POST /projects/{id}/scenarios       create a what-if scenario
  POST /projects/{id}/scenarios/{sid}/runs   run the scenario's stale set
  GET  /projects/{id}/scorecard       scorecard payload
  GET  /projects/{id}/report          report payload
  GET/PATCH /projects/{id}/report/sections/{credit_id}
  GET  /projects/{id}/schema          editable input paths for scenarios
  GET  /healthz
"""
from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .config import Config
from .datastore import is_quantity
from .project import ConflictError, NotFoundError, ProjectManager, ValidationError


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details or {}},
    )


def create_app(manager: Optional[ProjectManager] = None, config: Optional[Config] = None) -> FastAPI:
    config = config or Config.load()
    manager = manager or ProjectManager(config.projects_root, config)
    app = FastAPI(title="leedwork")
    # run ids are globally unique; remember which project owns each
    run_owner: dict[str, str] = {}

    @app.exception_handler(NotFoundError)
    async def _nf(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(ConflictError)
    async def _cf(request: Request, exc: ConflictError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(ValidationError)
    async def _ve(request: Request, exc: ValidationError):
        return _error(422, "validation_error", str(exc), {"fields": exc.fields})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/projects", status_code=201)
    async def create_project(request: Request):
        descriptor = await request.json()
        project_id = manager.create_project(descriptor)
        return {"project_id": project_id}

    @app.get("/projects")
    def list_projects():
        return {"projects": manager.list_projects()}

    @app.post("/projects/{project_id}/runs", status_code=201)
    def start_run(project_id: str, scope: str = "full"):
        handle = manager.run_review(project_id, scope=scope)
        run_owner[handle.run_id] = project_id
        return {
            "run_id": handle.run_id,
            "project_id": project_id,
            "state": handle.state,
            "tasks": handle.task_states,
        }

    def _find_owner(run_id: str) -> str:
        if run_id in run_owner:
            return run_owner[run_id]
        for pid in manager.list_projects():
            if run_id in manager.list_runs(pid):
                return pid
        raise NotFoundError(f"unknown run: {run_id}")

    @app.get("/runs/{run_id}")
    def poll_run(run_id: str):
        return manager.get_run(_find_owner(run_id), run_id)

    @app.get("/runs/{run_id}/events")
    def stream_events(run_id: str):
        events = manager.run_events(_find_owner(run_id), run_id)
        report = manager.get_run(_find_owner(run_id), run_id)

        def generate():
            for event in events:
                yield json.dumps(event, sort_keys=True) + "\n"
            yield json.dumps(
                {"terminal": True, "overall": report["overall"], "tasks": report["tasks"]},
                sort_keys=True,
            ) + "\n"

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.post("/projects/{project_id}/scenarios", status_code=201)
    async def create_scenario(project_id: str, request: Request):
        body = await request.json()
        return manager.apply_scenario(project_id, body["name"], body.get("changes", []))

    @app.post("/projects/{project_id}/scenarios/{scenario_id}/runs", status_code=201)
    def run_scenario(project_id: str, scenario_id: str):
        handle = manager.run_scenario(project_id, scenario_id)
        run_owner[handle.run_id] = project_id
        return {"run_id": handle.run_id, "state": handle.state, "tasks": handle.task_states}

    @app.get("/projects/{project_id}/scorecard")
    def scorecard(project_id: str, scenario: Optional[str] = None):
        return manager.get_scorecard(project_id, scenario_id=scenario)

    @app.get("/projects/{project_id}/report")
    def report(project_id: str):
        return manager.get_report(project_id)

    @app.get("/projects/{project_id}/report/sections/{credit_id}")
    def report_section(project_id: str, credit_id: str):
        doc = manager.get_report(project_id)
        for section in doc["sections"]:
            if section["credit_id"] == credit_id:
                return section
        raise NotFoundError(f"no report section for credit {credit_id}")

    @app.patch("/projects/{project_id}/report/sections/{credit_id}")
    async def patch_section(project_id: str, credit_id: str, request: Request):
        body = await request.json()
        return manager.patch_report_section(
            project_id, credit_id, body["text"], author=body.get("author", "reviewer")
        )

    @app.get("/projects/{project_id}/schema")
    def input_schema(project_id: str):
        """Whitelisted editable paths: every quantity or boolean leaf
        under $.inputs."""
        store = manager.load_store(project_id)
        paths: list[dict] = []

        def walk(node, prefix):
            if is_quantity(node):
                paths.append({"path": prefix, "type": "number", "unit": node["unit"]})
            elif isinstance(node, bool):
                paths.append({"path": prefix, "type": "boolean", "unit": None})
            elif isinstance(node, dict):
                for key, value in node.items():
                    walk(value, f"{prefix}.{key}")
            elif isinstance(node, list):
                for i, item in enumerate(node):
                    walk(item, f"{prefix}[{i}]")

        walk(store.inputs, "$.inputs")
        return {"editable": paths}

    return app
