"""Regenerate the API payload fixtures the frontend tests run against.

Requires the leedwork package (the backend) to be installed. Every fixture is
captured from real HTTP responses so UI tests compare rendered output against
actual API payloads, never against hand-written approximations.

Usage: python3 scripts/generate_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from leedwork.config import Config
from leedwork.fixtures import synthetic_descriptor, write_synthetic_page
from leedwork.project import ProjectManager
from leedwork.service import create_app

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def dump(name: str, payload) -> None:
    path = OUT / name
    if name.endswith(".ndjson"):
        path.write_text(payload, encoding="utf-8")
    else:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        manager = ProjectManager(Path(tmp) / "projects", Config(workers=2))
        client = TestClient(create_app(manager=manager, config=manager.config))

        pid = client.post("/projects", json=synthetic_descriptor()).json()["project_id"]
        write_synthetic_page(manager.project_dir(pid) / "docs" / "page1.pgm")

        run = client.post(f"/projects/{pid}/runs").json()
        run_id = run["run_id"]
        dump("run_report.json", client.get(f"/runs/{run_id}").json())
        dump("run_events.ndjson", client.get(f"/runs/{run_id}/events").text)

        dump("scorecard_base.json", client.get(f"/projects/{pid}/scorecard").json())
        dump("schema.json", client.get(f"/projects/{pid}/schema").json())
        dump("report.json", client.get(f"/projects/{pid}/report").json())

        scen = client.post(
            f"/projects/{pid}/scenarios",
            json={"name": "Lower WWR",
                  "changes": [{"path": "$.inputs.building.wwr", "value": 0.3}]},
        ).json()
        client.post(f"/projects/{pid}/scenarios/{scen['scenario_id']}/runs")
        dump(
            "scorecard_wwr.json",
            client.get(
                f"/projects/{pid}/scorecard", params={"scenario": scen["scenario_id"]}
            ).json(),
        )

        bad = client.post(
            "/projects", json={"name": "", "floor_area": 0, "stories": 0}
        )
        dump("error_validation.json", bad.json())


if __name__ == "__main__":
    main()
