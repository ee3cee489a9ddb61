import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from leedwork.cli import cli
from leedwork.config import Config
from leedwork.fixtures import (
    create_synthetic_project,
    synthetic_descriptor,
    write_synthetic_page,
)
from leedwork.project import (
    ConflictError,
    NotFoundError,
    ProjectManager,
    ValidationError,
)
from leedwork.service import create_app


@pytest.fixture
def project(manager):
    return create_synthetic_project(manager), manager


# -- project manager -------------------------------------------------------------


def test_create_project_validates_descriptor(manager):
    with pytest.raises(ValidationError) as err:
        manager.create_project({"name": "", "floor_area": -1, "stories": 0})
    assert set(err.value.fields) >= {"name", "floor_area", "stories"}


def test_create_project_conflict_on_duplicate_name(manager):
    create_synthetic_project(manager, name="Twin")
    with pytest.raises(ConflictError):
        create_synthetic_project(manager, name="Twin")


def test_project_layout_on_disk(project):
    pid, manager = project
    root = manager.project_dir(pid)
    for sub in ("runs", "scenarios", "reports", "docs"):
        assert (root / sub).is_dir()
    assert (root / "store.json").is_file()


def test_full_run_and_artifacts(project):
    pid, manager = project
    handle = manager.run_review(pid)
    assert handle.state == "done"
    assert all(t["status"] == "completed" for t in handle.task_states.values())

    sc = manager.get_scorecard(pid)
    assert sc["total_points"] == 27
    assert sc["coverage_percent"] == 90
    assert sc["credits"]["EAc2"]["awarded_points"] == 9
    assert sc["credits"]["EAc2"]["status"] == "achieved"

    report = manager.get_report(pid)
    assert report["status"] == "verified"
    assert len(report["sections"]) == 10
    assert (manager.project_dir(pid) / "reports" / "report.md").is_file()

    run_doc = manager.get_run(pid, handle.run_id)
    assert run_doc["overall"] == "complete"
    events = manager.run_events(pid, handle.run_id)
    assert any(e["to"] == "completed" for e in events)


def test_scorecard_before_any_run_is_not_found(project):
    pid, manager = project
    with pytest.raises(NotFoundError):
        manager.get_scorecard(pid)
    with pytest.raises(NotFoundError):
        manager.get_report(pid)


def test_lock_blocks_concurrent_runs(project):
    pid, manager = project
    lock = manager.project_dir(pid) / ".lock"
    lock.write_text("fake")
    with pytest.raises(ConflictError):
        manager.run_review(pid)
    lock.unlink()
    assert manager.run_review(pid).state == "done"


def test_scenario_isolated_from_base_store(project):
    pid, manager = project
    manager.run_review(pid)
    base_blob = manager.store_path(pid).read_bytes()
    result = manager.apply_scenario(
        pid, "Thin Windows",
        [{"path": "$.inputs.building.envelope[5].u_value", "value": 1.2}],
    )
    assert result["scenario_id"] == "thin-windows"
    assert set(result["stale_tasks"]) == {"energymod", "credits", "reportgen"}
    handle = manager.run_scenario(pid, "thin-windows")
    assert handle.state == "done"
    # base store is byte-identical after the scenario run
    assert manager.store_path(pid).read_bytes() == base_blob
    base_sc = manager.get_scorecard(pid)
    scen_sc = manager.get_scorecard(pid, scenario_id="thin-windows")
    assert scen_sc["total_points"] >= base_sc["total_points"]


def test_scenario_rejects_non_input_paths(project):
    pid, manager = project
    with pytest.raises(ValidationError):
        manager.apply_scenario(pid, "bad", [{"path": "$.results.credits.total_points", "value": 99}])
    with pytest.raises(ValidationError):
        manager.apply_scenario(pid, "bad", [{"path": "$.inputs.not.there", "value": 1}])


def test_scenario_unit_guard(project):
    pid, manager = project
    with pytest.raises(ValidationError):
        manager.apply_scenario(
            pid, "bad-unit",
            [{"path": "$.inputs.building.wwr", "value": {"value": 0.5, "unit": "m2"}}],
        )


def test_report_revision_history(project):
    pid, manager = project
    manager.run_review(pid)
    first = manager.patch_report_section(pid, "EAc2", "Edited narrative one.")
    second = manager.patch_report_section(pid, "EAc2", "Edited narrative two.")
    assert (first["revision"], second["revision"]) == (1, 2)
    report = manager.get_report(pid)
    [section] = [s for s in report["sections"] if s["credit_id"] == "EAc2"]
    assert section["text"] == "Edited narrative two."
    assert section["revision"] == 2
    with pytest.raises(NotFoundError):
        manager.patch_report_section(pid, "XXc9", "nope")


# -- HTTP API ---------------------------------------------------------------------


@pytest.fixture
def client(manager):
    app = create_app(manager=manager, config=manager.config)
    return TestClient(app)


def api_project(client, manager):
    """Create a project over the API and drop its document page on disk."""
    pid = client.post("/projects", json=synthetic_descriptor()).json()["project_id"]
    write_synthetic_page(manager.project_dir(pid) / "docs" / "page1.pgm")
    return pid


def test_healthz(client):
    assert client.get("/healthz").json() == {"status": "ok"}


def test_api_project_lifecycle(client, manager):
    resp = client.post("/projects", json=synthetic_descriptor())
    assert resp.status_code == 201
    pid = resp.json()["project_id"]
    write_synthetic_page(manager.project_dir(pid) / "docs" / "page1.pgm")
    assert pid in client.get("/projects").json()["projects"]

    run = client.post(f"/projects/{pid}/runs")
    assert run.status_code == 201
    body = run.json()
    assert body["state"] == "done"
    run_id = body["run_id"]

    poll = client.get(f"/runs/{run_id}")
    assert poll.status_code == 200
    assert poll.json()["overall"] == "complete"

    sc = client.get(f"/projects/{pid}/scorecard").json()
    assert sc["total_points"] == 27

    report = client.get(f"/projects/{pid}/report").json()
    assert report["status"] == "verified"


def test_api_event_stream_ends_with_terminal(client, manager):
    pid = api_project(client, manager)
    run_id = client.post(f"/projects/{pid}/runs").json()["run_id"]
    resp = client.get(f"/runs/{run_id}/events")
    assert resp.status_code == 200
    lines = [json.loads(l) for l in resp.text.strip().splitlines()]
    assert len(lines) >= 2
    assert all("terminal" not in e for e in lines[:-1])
    assert lines[-1]["terminal"] is True
    assert lines[-1]["overall"] == "complete"
    # events replay the recorded transitions in order
    assert [e for e in lines[:-1] if e["task"] == "credits"]


def test_api_error_shapes(client):
    missing = client.get("/projects/nope/scorecard")
    assert missing.status_code == 404
    body = missing.json()
    assert set(body) == {"code", "message", "details"}
    assert body["code"] == "not_found"

    bad = client.post("/projects", json={"name": "", "floor_area": 0, "stories": 0})
    assert bad.status_code == 422
    assert bad.json()["code"] == "validation_error"
    assert "floor_area" in bad.json()["details"]["fields"]

    client.post("/projects", json=synthetic_descriptor())
    dup = client.post("/projects", json=synthetic_descriptor())
    assert dup.status_code == 409
    assert dup.json()["code"] == "conflict"


def test_api_scenario_and_schema(client, manager):
    pid = api_project(client, manager)
    client.post(f"/projects/{pid}/runs")

    schema = client.get(f"/projects/{pid}/schema").json()["editable"]
    paths = {e["path"] for e in schema}
    assert "$.inputs.building.wwr" in paths
    assert "$.inputs.building.ventilation_ok" in paths
    wwr = next(e for e in schema if e["path"] == "$.inputs.building.wwr")
    assert (wwr["type"], wwr["unit"]) == ("number", "1")

    scen = client.post(
        f"/projects/{pid}/scenarios",
        json={"name": "More Water Savings",
              "changes": [{"path": "$.inputs.water.reduction", "value": 0.45}]},
    )
    assert scen.status_code == 201
    sid = scen.json()["scenario_id"]
    assert "credits" in scen.json()["stale_tasks"]
    run = client.post(f"/projects/{pid}/scenarios/{sid}/runs")
    assert run.status_code == 201
    scen_sc = client.get(f"/projects/{pid}/scorecard", params={"scenario": sid}).json()
    base_sc = client.get(f"/projects/{pid}/scorecard").json()
    assert scen_sc["total_points"] > base_sc["total_points"]  # WEc1 0.45 -> 6 pts vs 3


def test_api_report_section_get_and_patch(client, manager):
    pid = api_project(client, manager)
    client.post(f"/projects/{pid}/runs")
    section = client.get(f"/projects/{pid}/report/sections/EAc2")
    assert section.status_code == 200
    assert section.json()["credit_id"] == "EAc2"
    patched = client.patch(
        f"/projects/{pid}/report/sections/EAc2", json={"text": "New text."}
    )
    assert patched.json() == {"credit_id": "EAc2", "revision": 1}
    assert client.get(f"/projects/{pid}/report/sections/EAc2").json()["text"] == "New text."
    assert client.get(f"/projects/{pid}/report/sections/ZZc1").status_code == 404


# -- CLI ----------------------------------------------------------------------------


def invoke(tmp_path, *args):
    runner = CliRunner()
    return runner.invoke(cli, ["--root", str(tmp_path / "projects"), *args])


def test_cli_init_run_status_scorecard(tmp_path):
    res = invoke(tmp_path, "init", "--name", "CLI Office", "--json")
    assert res.exit_code == 0, res.output
    pid = json.loads(res.output)["project_id"]

    res = invoke(tmp_path, "run", pid, "--json")
    assert res.exit_code == 0, res.output
    payload = json.loads(res.output)
    assert payload["state"] == "done"
    assert payload["scorecard"]["total_points"] == 27
    run_id = payload["run_id"]

    res = invoke(tmp_path, "status", pid, run_id)
    assert res.exit_code == 0
    assert "complete" in res.output

    res = invoke(tmp_path, "scorecard", pid, "--json")
    assert res.exit_code == 0
    assert json.loads(res.output)["coverage_percent"] == 90


def test_cli_exports_figures_and_csv(tmp_path):
    invoke(tmp_path, "init", "--name", "Fig Office")
    invoke(tmp_path, "run", "fig-office")
    out = tmp_path / "artifacts"
    res = invoke(tmp_path, "scorecard", "fig-office", "--out", str(out))
    assert res.exit_code == 0, res.output
    assert (out / "scorecard.csv").is_file()
    assert (out / "scorecard_by_category.png").stat().st_size > 0
    assert (out / "credit_status.png").stat().st_size > 0
    header = (out / "scorecard.csv").read_text().splitlines()[0]
    assert "credit_id" in header


def test_cli_report_command(tmp_path):
    invoke(tmp_path, "init", "--name", "Rep Office")
    invoke(tmp_path, "run", "rep-office")
    out = tmp_path / "report-out"
    res = invoke(tmp_path, "report", "rep-office", "--out", str(out))
    assert res.exit_code == 0, res.output
    assert (out / "report.md").read_text().startswith("# Compliance Report")


def test_cli_scenario_command(tmp_path):
    invoke(tmp_path, "init", "--name", "Scen Office")
    invoke(tmp_path, "run", "scen-office")
    res = invoke(
        tmp_path, "scenario", "scen-office", "Better Water",
        "--set", "$.inputs.water.reduction=0.45", "--run", "--json",
    )
    assert res.exit_code == 0, res.output
    payload = json.loads(res.output)
    assert payload["scenario_id"] == "better-water"
    assert "credits" in payload["stale_tasks"]


def test_cli_exit_codes(tmp_path):
    # unknown command -> usage error
    assert invoke(tmp_path, "frobnicate").exit_code == 3
    # malformed --set -> usage error
    invoke(tmp_path, "init", "--name", "Exit Office")
    res = invoke(tmp_path, "scenario", "exit-office", "X", "--set", "no-equals-sign")
    assert res.exit_code == 3
    # unknown project -> failure
    assert invoke(tmp_path, "run", "ghost-project").exit_code == 2
    assert invoke(tmp_path, "status", "ghost", "r1").exit_code == 2
