"""Building-energy modeling: store-to-model extraction, simulation input
(IDF) generation/parsing/validation, a built-in steady-state degree-day
simulator, and the energy metrics consumed by the credit engine.

The built-in simulator is a transparent closed-form stand-in:
    heating = UA * HDD * 24 / 1000 / eta_h          [kWh]
    cooling = UA * CDD * 24 / 1000 / COP            [kWh]
    lighting/equipment = density * area * sum(schedule) / 1000
The external engine path shells out to the real simulator when a binary
is configured.
"""
from __future__ import annotations

import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .datastore import NOT_FOUND, UnifiedStore
from .orchestrator import PermanentTaskError, TransientTaskError

HOURS_PER_YEAR = 8760
SQFT_TO_M2 = 0.09290304


class ModelError(PermanentTaskError):
    """Missing or out-of-range building data."""


class EngineUnavailable(TransientTaskError):
    """External engine binary absent; retryable or fall back to builtin."""


# -- domain types --------------------------------------------------------


@dataclass(frozen=True)
class ZoneSpec:
    name: str
    floor_area: float  # m2

    def __post_init__(self) -> None:
        if self.floor_area <= 0:
            raise ModelError(f"zone {self.name!r}: floor area must be > 0")


@dataclass(frozen=True)
class SurfaceSpec:
    name: str
    surface_type: str  # wall | roof | window | floor
    area: float  # m2
    u_value: float  # W/m2K
    orientation: str = "N"


@dataclass(frozen=True)
class HvacSpec:
    system_type: str = "ideal_loads"
    heating_efficiency: float = 0.9  # eta_h in (0, 1.5]
    cooling_cop: float = 3.0


@dataclass
class ScheduleSeries:
    name: str
    hourly: list[float]  # exactly 8760 fractions in [0, 1]
    weekly_template: Optional[dict] = None

    def __post_init__(self) -> None:
        if len(self.hourly) != HOURS_PER_YEAR:
            raise ModelError(f"schedule {self.name!r}: need {HOURS_PER_YEAR} hours")
        if any(not 0 <= v <= 1 for v in self.hourly):
            raise ModelError(f"schedule {self.name!r}: values must lie in [0, 1]")

    @property
    def annual_sum(self) -> float:
        return sum(self.hourly)


@dataclass
class BuildingModel:
    zones: list[ZoneSpec]
    envelope: list[SurfaceSpec]
    hvac: HvacSpec
    schedules: dict[str, ScheduleSeries]
    lighting_density: float = 10.0  # W/m2
    equipment_density: float = 8.0  # W/m2

    @property
    def floor_area(self) -> float:
        return sum(z.floor_area for z in self.zones)

    @property
    def ua(self) -> float:
        """Envelope conductance sum(area * U), W/K."""
        return sum(s.area * s.u_value for s in self.envelope)


@dataclass(frozen=True)
class Weather:
    hdd: float  # K*day, base 18 C
    cdd: float  # K*day
    location: str = ""
    weather_file: Optional[str] = None


@dataclass
class SimulationResult:
    heating_kwh: float
    cooling_kwh: float
    lighting_kwh: float
    equipment_kwh: float
    floor_area: float
    engine: str = "builtin"
    warnings: list[str] = field(default_factory=list)

    @property
    def total_kwh(self) -> float:
        return self.heating_kwh + self.cooling_kwh + self.lighting_kwh + self.equipment_kwh

    @property
    def eui(self) -> float:
        return self.total_kwh / self.floor_area


# -- schedule expansion ----------------------------------------------------

WEEKDAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def expand_weekly_schedule(name: str, template: dict) -> ScheduleSeries:
    """Expand a weekly template to 8760 hours.

    The template maps day names to 24 hourly fractions ("default" covers
    unnamed days). 52 full weeks are laid down starting Monday; the
    year's remaining day(s) repeat the template's weekday pattern.
    """
    default = template.get("default", [0.0] * 24)
    days = []
    for day in WEEKDAYS:
        hours = template.get(day, default)
        if len(hours) != 24:
            raise ModelError(f"schedule {name!r}: day {day!r} needs 24 values")
        days.append([float(v["value"] if isinstance(v, dict) else v) for v in hours])
    hourly: list[float] = []
    for _ in range(52):
        for day in days:
            hourly.extend(day)
    weekday_pattern = days[0]  # remaining days repeat the weekday template
    while len(hourly) < HOURS_PER_YEAR:
        hourly.extend(weekday_pattern)
    return ScheduleSeries(name=name, hourly=hourly[:HOURS_PER_YEAR], weekly_template=template)


# -- extraction ------------------------------------------------------------


def _require(store: UnifiedStore, path: str):
    got = store.query_path(path)
    if got is NOT_FOUND:
        raise ModelError(f"missing required field {path}")
    return got


def extract_building_model(store: UnifiedStore) -> BuildingModel:
    """Build a validated BuildingModel from store inputs."""
    building = _require(store, "$.inputs.building")
    zones = []
    for i, zone in enumerate(building.get("zones", [])):
        area = zone.get("floor_area")
        if not isinstance(area, dict) or "value" not in area:
            raise ModelError(f"missing required field $.inputs.building.zones[{i}].floor_area")
        zones.append(ZoneSpec(name=zone.get("name", f"Z{i + 1}"), floor_area=area["value"]))

    envelope = []
    for i, surf in enumerate(building.get("envelope", [])):
        u = surf.get("u_value")
        if not isinstance(u, dict) or "value" not in u:
            raise ModelError(f"missing required field $.inputs.building.envelope[{i}].u_value")
        area = surf.get("area")
        if not isinstance(area, dict) or "value" not in area:
            raise ModelError(f"missing required field $.inputs.building.envelope[{i}].area")
        if u["value"] <= 0:
            raise ModelError(
                f"$.inputs.building.envelope[{i}].u_value out of range: {u['value']}"
            )
        envelope.append(
            SurfaceSpec(
                name=surf.get("name", f"S{i + 1}"),
                surface_type=surf.get("type", "wall"),
                area=area["value"],
                u_value=u["value"],
                orientation=surf.get("orientation", "N"),
            )
        )

    hvac_raw = building.get("hvac", {})
    eta = hvac_raw.get("heating_efficiency", {"value": 0.9})["value"]
    cop = hvac_raw.get("cooling_cop", {"value": 3.0})["value"]
    if not 0 < eta <= 1.5:
        raise ModelError(f"$.inputs.building.hvac.heating_efficiency out of range: {eta}")
    if cop <= 0:
        raise ModelError(f"$.inputs.building.hvac.cooling_cop out of range: {cop}")
    hvac = HvacSpec(
        system_type=hvac_raw.get("system_type", "ideal_loads"),
        heating_efficiency=eta,
        cooling_cop=cop,
    )

    schedules: dict[str, ScheduleSeries] = {}
    for name, template in building.get("schedules", {}).items():
        schedules[name] = expand_weekly_schedule(name, template)
    if "occupancy" not in schedules:
        schedules["occupancy"] = ScheduleSeries("occupancy", [1.0] * HOURS_PER_YEAR)

    gains = building.get("internal_gains", {})
    lighting = gains.get("lighting", {"value": 10.0})["value"]
    equipment = gains.get("equipment", {"value": 8.0})["value"]
    return BuildingModel(
        zones=zones,
        envelope=envelope,
        hvac=hvac,
        schedules=schedules,
        lighting_density=lighting,
        equipment_density=equipment,
    )


# -- IDF documents ----------------------------------------------------------


@dataclass(frozen=True)
class IdfObject:
    class_name: str
    fields: tuple[tuple[str, str], ...]  # (field comment, value) pairs

    @property
    def name(self) -> str:
        return self.fields[0][1] if self.fields else ""


@dataclass
class IdfDocument:
    objects: list[IdfObject]


class IdfError(PermanentTaskError):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        text = f"{value:.6f}".rstrip("0").rstrip(".")
        return text if text else "0"
    return str(value)


def build_idf(model: BuildingModel) -> IdfDocument:
    """Lower a BuildingModel to the supported simulation-object subset."""
    if not model.zones:
        raise IdfError("model has no zones")
    objects: list[IdfObject] = []
    for zone in model.zones:
        objects.append(
            IdfObject(
                "Zone",
                (
                    ("Name", zone.name),
                    ("Floor Area {m2}", _fmt(zone.floor_area)),
                ),
            )
        )
    for surf in model.envelope:
        objects.append(
            IdfObject(
                "BuildingSurface:Detailed",
                (
                    ("Name", surf.name),
                    ("Surface Type", surf.surface_type),
                    ("Area {m2}", _fmt(surf.area)),
                    ("U-Value {W/m2-K}", _fmt(surf.u_value)),
                    ("Orientation", surf.orientation),
                ),
            )
        )
    for name in sorted(model.schedules):
        schedule = model.schedules[name]
        objects.append(
            IdfObject(
                "Schedule:Compact",
                (
                    ("Name", name),
                    ("Annual Sum {hr}", _fmt(round(schedule.annual_sum, 6))),
                ),
            )
        )
    objects.append(
        IdfObject(
            "HVACTemplate:Zone:IdealLoadsAirSystem",
            (
                ("Name", "hvac_main"),
                ("System Type", model.hvac.system_type),
                ("Heating Efficiency", _fmt(model.hvac.heating_efficiency)),
                ("Cooling COP", _fmt(model.hvac.cooling_cop)),
            ),
        )
    )
    objects.append(
        IdfObject(
            "Lights",
            (
                ("Name", "lights_main"),
                ("Watts per Zone Floor Area {W/m2}", _fmt(model.lighting_density)),
                ("Schedule Name", "occupancy"),
            ),
        )
    )
    objects.append(
        IdfObject(
            "ElectricEquipment",
            (
                ("Name", "equipment_main"),
                ("Watts per Zone Floor Area {W/m2}", _fmt(model.equipment_density)),
                ("Schedule Name", "occupancy"),
            ),
        )
    )
    objects.sort(key=lambda o: (o.class_name, o.name))
    return IdfDocument(objects)


def emit_idf(doc: IdfDocument) -> str:
    """Serialize to the engine's text convention.

    One object per block: "Class," then one field per line ending with a
    comma (semicolon on the last), each annotated with an "!-" comment
    naming the field.
    """
    blocks: list[str] = []
    for obj in doc.objects:
        lines = [f"{obj.class_name},"]
        for i, (comment, value) in enumerate(obj.fields):
            terminator = ";" if i == len(obj.fields) - 1 else ","
            lines.append(f"  {value}{terminator}  !- {comment}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def parse_idf(text: str) -> IdfDocument:
    """Inverse of emit_idf for the supported convention."""
    objects: list[IdfObject] = []
    current_class: Optional[str] = None
    fields: list[tuple[str, str]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if current_class is None:
            if not line.endswith(","):
                raise IdfError(f"expected class header, got: {line!r}")
            current_class = line[:-1]
            fields = []
            continue
        body, _, comment = line.partition("!-")
        body = body.strip()
        comment = comment.strip()
        if body.endswith(";"):
            fields.append((comment, body[:-1].strip()))
            objects.append(IdfObject(current_class, tuple(fields)))
            current_class = None
        elif body.endswith(","):
            fields.append((comment, body[:-1].strip()))
        else:
            raise IdfError(f"field line missing terminator: {line!r}")
    if current_class is not None:
        raise IdfError(f"unterminated object: {current_class}")
    return IdfDocument(objects)


@dataclass(frozen=True)
class IdfFinding:
    object_name: str
    message: str


def validate_idf(doc: IdfDocument) -> list[IdfFinding]:
    """Physical-consistency checks; empty report means simulation-ready."""
    findings: list[IdfFinding] = []
    seen: dict[tuple[str, str], int] = {}
    schedule_names = {
        o.name for o in doc.objects if o.class_name == "Schedule:Compact"
    }
    for obj in doc.objects:
        key = (obj.class_name, obj.name)
        seen[key] = seen.get(key, 0) + 1
        fields = dict(obj.fields)
        if obj.class_name == "Zone":
            area = float(fields.get("Floor Area {m2}", 0))
            if area <= 0:
                findings.append(IdfFinding(obj.name, f"zone floor area must be > 0, got {area}"))
        elif obj.class_name == "BuildingSurface:Detailed":
            area = float(fields.get("Area {m2}", 0))
            u = float(fields.get("U-Value {W/m2-K}", 0))
            if area <= 0:
                findings.append(IdfFinding(obj.name, f"surface area must be > 0, got {area}"))
            if not 0 < u <= 10:
                findings.append(IdfFinding(obj.name, f"U-value must lie in (0, 10], got {u}"))
        elif obj.class_name == "HVACTemplate:Zone:IdealLoadsAirSystem":
            eta = float(fields.get("Heating Efficiency", 0))
            cop = float(fields.get("Cooling COP", 0))
            if not 0 < eta <= 1.5:
                findings.append(IdfFinding(obj.name, f"heating efficiency out of range: {eta}"))
            if cop <= 0:
                findings.append(IdfFinding(obj.name, f"cooling COP out of range: {cop}"))
        elif obj.class_name in ("Lights", "ElectricEquipment"):
            ref = fields.get("Schedule Name", "")
            if ref and ref not in schedule_names:
                findings.append(IdfFinding(obj.name, f"schedule reference {ref!r} unresolved"))
    for (class_name, name), count in seen.items():
        if count > 1:
            findings.append(
                IdfFinding(name, f"duplicate name {name!r} within class {class_name}")
            )
    return findings


# -- simulation --------------------------------------------------------------


def simulate_builtin(model: BuildingModel, weather: Weather) -> SimulationResult:
    """Steady-state degree-day annual model."""
    ua = model.ua
    heating = ua * weather.hdd * 24 / 1000 / model.hvac.heating_efficiency
    cooling = ua * weather.cdd * 24 / 1000 / model.hvac.cooling_cop
    occupancy = model.schedules["occupancy"].annual_sum
    area = model.floor_area
    lighting = model.lighting_density * area * occupancy / 1000
    equipment = model.equipment_density * area * occupancy / 1000
    return SimulationResult(
        heating_kwh=heating,
        cooling_kwh=cooling,
        lighting_kwh=lighting,
        equipment_kwh=equipment,
        floor_area=area,
        engine="builtin",
    )


def simulate_external(
    model: BuildingModel,
    weather: Weather,
    engine_path: str,
    work_dir: str | Path,
) -> SimulationResult:
    """Invoke the external engine on the serialized IDF."""
    doc = build_idf(model)
    findings = validate_idf(doc)
    if findings:
        raise IdfError("; ".join(f"{f.object_name}: {f.message}" for f in findings))
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    idf_path = work_dir / "model.idf"
    idf_path.write_text(emit_idf(doc), encoding="utf-8")
    weather_path = weather.weather_file or str(work_dir / "weather.epw")
    try:
        proc = subprocess.run(
            [engine_path, str(idf_path), str(weather_path), str(work_dir)],
            capture_output=True,
            timeout=600,
        )
    except FileNotFoundError as exc:
        raise EngineUnavailable(f"engine binary not found: {engine_path}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.decode(errors="replace")[-500:]
        raise PermanentTaskError(f"engine exited {proc.returncode}: {tail}")
    return _parse_meter_csv(work_dir / "meters.csv", model.floor_area)


def _parse_meter_csv(path: Path, floor_area: float) -> SimulationResult:
    import csv

    totals = {"heating": 0.0, "cooling": 0.0, "lighting": 0.0, "equipment": 0.0}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            end_use = row.get("end_use", "").lower()
            if end_use in totals:
                totals[end_use] += float(row.get("kwh", 0))
    return SimulationResult(
        heating_kwh=totals["heating"],
        cooling_kwh=totals["cooling"],
        lighting_kwh=totals["lighting"],
        equipment_kwh=totals["equipment"],
        floor_area=floor_area,
        engine="external",
    )


def simulate(
    model: BuildingModel,
    weather: Weather,
    engine: str = "builtin",
    engine_path: Optional[str] = None,
    work_dir: str | Path = ".",
) -> SimulationResult:
    if engine == "builtin":
        return simulate_builtin(model, weather)
    if engine == "external":
        if not engine_path:
            raise EngineUnavailable("no external engine configured")
        return simulate_external(model, weather, engine_path, work_dir)
    raise ValueError(f"unknown engine {engine!r}")


@dataclass
class EnergyMetrics:
    eui_proposed: float
    eui_baseline: float
    reduction: Optional[float]  # None when the baseline total is zero

    @property
    def indeterminate(self) -> bool:
        return self.reduction is None


def compute_energy_metrics(
    baseline: SimulationResult, proposed: SimulationResult
) -> EnergyMetrics:
    """Fractional energy-cost reduction of proposed vs baseline."""
    if baseline.total_kwh == 0:
        return EnergyMetrics(
            eui_proposed=proposed.eui, eui_baseline=0.0, reduction=None
        )
    return EnergyMetrics(
        eui_proposed=proposed.eui,
        eui_baseline=baseline.eui,
        reduction=1 - proposed.total_kwh / baseline.total_kwh,
    )
