"""Bundled synthetic pilot project: a six-story office building with
full inputs for every analysis module, plus a generated document page so
the extraction pipeline has real raster work to do. All values are
fixtures."""
from __future__ import annotations

from pathlib import Path

import numpy as np

FLOOR_AREA_M2 = 6967.7  # 75,000 sq ft office complex
STORIES = 6


def synthetic_descriptor() -> dict:
    per_floor = round(FLOOR_AREA_M2 / STORIES, 2)
    zones = [
        {"name": f"Floor{i + 1}", "floor_area": {"value": per_floor, "unit": "m2"}}
        for i in range(STORIES)
    ]
    envelope = [
        {"name": "Wall-N", "type": "wall", "orientation": "N",
         "area": {"value": 500.0, "unit": "m2"}, "u_value": {"value": 0.35, "unit": "W/m2K"}},
        {"name": "Wall-E", "type": "wall", "orientation": "E",
         "area": {"value": 500.0, "unit": "m2"}, "u_value": {"value": 0.35, "unit": "W/m2K"}},
        {"name": "Wall-S", "type": "wall", "orientation": "S",
         "area": {"value": 500.0, "unit": "m2"}, "u_value": {"value": 0.35, "unit": "W/m2K"}},
        {"name": "Wall-W", "type": "wall", "orientation": "W",
         "area": {"value": 500.0, "unit": "m2"}, "u_value": {"value": 0.35, "unit": "W/m2K"}},
        {"name": "Roof", "type": "roof", "orientation": "N",
         "area": {"value": 1161.28, "unit": "m2"}, "u_value": {"value": 0.2, "unit": "W/m2K"}},
        {"name": "Windows", "type": "window", "orientation": "S",
         "area": {"value": 600.0, "unit": "m2"}, "u_value": {"value": 1.8, "unit": "W/m2K"}},
        {"name": "Slab", "type": "floor", "orientation": "N",
         "area": {"value": 1161.28, "unit": "m2"}, "u_value": {"value": 0.3, "unit": "W/m2K"}},
    ]
    def frac_day(hours: list[float]) -> list[dict]:
        return [{"value": v, "unit": "1"} for v in hours]

    office_day = [0.0] * 8 + [1.0] * 10 + [0.0] * 6  # 08:00-18:00
    schedules = {
        "occupancy": {
            "mon": frac_day(office_day), "tue": frac_day(office_day),
            "wed": frac_day(office_day), "thu": frac_day(office_day),
            "fri": frac_day(office_day),
            "default": frac_day([0.0] * 24),
        }
    }

    def worse(surface: dict, u: float) -> dict:
        out = dict(surface)
        out["u_value"] = {"value": u, "unit": "W/m2K"}
        return out

    baseline_envelope = [
        worse(envelope[0], 0.5), worse(envelope[1], 0.5),
        worse(envelope[2], 0.5), worse(envelope[3], 0.5),
        worse(envelope[4], 0.3), worse(envelope[5], 2.8), worse(envelope[6], 0.4),
    ]

    return {
        "name": "Pilot Office",
        "rating_system": "LEED v4 BD+C",
        "floor_area": FLOOR_AREA_M2,
        "stories": STORIES,
        "location": {"lat": 37.5665, "lon": 126.9780},
        "inputs": {
            "building": {
                "zones": zones,
                "envelope": envelope,
                "hvac": {
                    "system_type": "ideal_loads",
                    "heating_efficiency": {"value": 0.9, "unit": "1"},
                    "cooling_cop": {"value": 3.0, "unit": "1"},
                },
                "schedules": schedules,
                "internal_gains": {
                    "lighting": {"value": 10.0, "unit": "W/m2"},
                    "equipment": {"value": 8.0, "unit": "W/m2"},
                },
                "wwr": {"value": 0.4, "unit": "1"},
                "ventilation_ok": True,
            },
            "baseline_building": {
                "zones": zones,
                "envelope": baseline_envelope,
                "hvac": {
                    "system_type": "ideal_loads",
                    "heating_efficiency": {"value": 0.8, "unit": "1"},
                    "cooling_cop": {"value": 2.8, "unit": "1"},
                },
                "schedules": schedules,
                "internal_gains": {
                    "lighting": {"value": 12.0, "unit": "W/m2"},
                    "equipment": {"value": 9.0, "unit": "W/m2"},
                },
            },
            "weather": {
                "hdd": {"value": 2500.0, "unit": "K.d"},
                "cdd": {"value": 900.0, "unit": "K.d"},
                "location": "fixture-city",
            },
            "site": {
                "esc_plan": True,
                "open_space_fraction": {"value": 0.35, "unit": "1"},
            },
            "water": {"reduction": {"value": 0.32, "unit": "1"}},
            "energy": {"renewable_fraction": {"value": 0.12, "unit": "1"}},
            "materials": {"recycled_fraction": {"value": 0.25, "unit": "1"}},
            "documents": [{"id": "spec-sheet", "path": "docs/page1.pgm", "dpi": {"value": 600, "unit": "1"}}],
        },
    }


def write_synthetic_page(path: str | Path, width: int = 400, height: int = 300) -> None:
    """White page with two dark text-like bands, as binary PGM."""
    page = np.full((height, width), 255, dtype=np.uint8)
    page[60:80, 50:250] = 20  # 200x20 band
    page[140:158, 50:200] = 20  # 150x18 band
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + page.tobytes())


def create_synthetic_project(manager, name: str = "Pilot Office") -> str:
    """Create the bundled project under the given ProjectManager."""
    descriptor = synthetic_descriptor()
    descriptor["name"] = name
    project_id = manager.create_project(descriptor)
    write_synthetic_page(manager.project_dir(project_id) / "docs" / "page1.pgm")
    return project_id
