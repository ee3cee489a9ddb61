"""Location analysis: great-circle distances, transit proximity,
walkability, and sensitive-land (point-in-polygon) checks over offline
GIS fixtures or an HTTP API adapter."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .orchestrator import TransientTaskError

EARTH_RADIUS_M = 6_371_008.8

# Plausible LEED-style defaults; configurable, not official values.
DEFAULT_TRANSIT_RADIUS_M = 400.0
DEFAULT_MIN_WEEKDAY_TRIPS = 72
DEFAULT_WALK_RADIUS_M = 800.0
DEFAULT_MIN_CATEGORIES = 4

ON_EDGE_EPS_DEG = 1e-9


class GeoConfigurationError(Exception):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90 <= self.lat <= 90:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180 <= self.lon <= 180:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class TransitStop:
    location: GeoPoint
    modes: frozenset[str] = frozenset({"bus"})
    weekday_trips: int = 0


@dataclass(frozen=True)
class Amenity:
    location: GeoPoint
    category: str


@dataclass(frozen=True)
class ParcelPolygon:
    ring: tuple[GeoPoint, ...]
    classification: str = "ordinary"  # ordinary | sensitive

    def __post_init__(self) -> None:
        distinct = {(p.lat, p.lon) for p in self.ring}
        if len(distinct) < 3:
            raise ValueError("polygon needs at least 3 distinct vertices")

    def closed_ring(self) -> tuple[GeoPoint, ...]:
        ring = self.ring
        if ring[0] != ring[-1]:
            ring = ring + (ring[0],)
        return ring


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters (R = 6,371,008.8 m)."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass
class TransitReport:
    stops_within: int
    total_trips: int
    qualifies: bool


def transit_score(
    site: GeoPoint,
    stops: list[TransitStop],
    radius: float = DEFAULT_TRANSIT_RADIUS_M,
    min_trips: int = DEFAULT_MIN_WEEKDAY_TRIPS,
) -> TransitReport:
    """Stops within the (closed) radius; qualifies on total weekday trips."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    within = [s for s in stops if haversine_distance(site, s.location) <= radius]
    total = sum(s.weekday_trips for s in within)
    return TransitReport(stops_within=len(within), total_trips=total, qualifies=total >= min_trips)


@dataclass
class WalkabilityReport:
    categories_within: int
    qualifies: bool


def walkability_score(
    site: GeoPoint,
    amenities: list[Amenity],
    radius: float = DEFAULT_WALK_RADIUS_M,
    min_categories: int = DEFAULT_MIN_CATEGORIES,
) -> WalkabilityReport:
    """Distinct amenity categories within radius; duplicates count once."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    categories = {
        a.category for a in amenities if haversine_distance(site, a.location) <= radius
    }
    return WalkabilityReport(
        categories_within=len(categories), qualifies=len(categories) >= min_categories
    )


def point_in_polygon(p: GeoPoint, poly: ParcelPolygon) -> str:
    """Even-odd ray casting in a local equirectangular projection.

    Returns "inside", "outside", or "boundary" (within 1e-9 degrees of
    an edge).
    """
    ring = poly.closed_ring()
    lat0 = sum(v.lat for v in ring[:-1]) / (len(ring) - 1)
    scale = math.cos(math.radians(lat0))
    pts = [(v.lon * scale, v.lat) for v in ring]
    px, py = p.lon * scale, p.lat

    for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
        if _on_segment(px, py, x1, y1, x2, y2):
            return "boundary"

    inside = False
    for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
        if (y1 > py) != (y2 > py):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_cross:
                inside = not inside
    return "inside" if inside else "outside"


def _on_segment(px, py, x1, y1, x2, y2, eps: float = ON_EDGE_EPS_DEG) -> bool:
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    seg_len = math.hypot(x2 - x1, y2 - y1)
    if seg_len == 0:
        return math.hypot(px - x1, py - y1) <= eps
    if abs(cross) / seg_len > eps:
        return False
    dot = (px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)
    return -eps * seg_len <= dot <= seg_len**2 + eps * seg_len


@dataclass
class GisDataset:
    stops: list[TransitStop] = field(default_factory=list)
    amenities: list[Amenity] = field(default_factory=list)
    parcels: list[ParcelPolygon] = field(default_factory=list)

    @classmethod
    def from_dict(cls, doc: dict) -> "GisDataset":
        stops = [
            TransitStop(
                location=GeoPoint(s["lat"], s["lon"]),
                modes=frozenset(s.get("modes", ["bus"])),
                weekday_trips=int(s.get("weekday_trips", 0)),
            )
            for s in doc.get("stops", [])
        ]
        amenities = [
            Amenity(location=GeoPoint(a["lat"], a["lon"]), category=a["category"])
            for a in doc.get("amenities", [])
        ]
        parcels = [
            ParcelPolygon(
                ring=tuple(GeoPoint(v["lat"], v["lon"]) for v in p["ring"]),
                classification=p.get("classification", "ordinary"),
            )
            for p in doc.get("parcels", [])
        ]
        return cls(stops=stops, amenities=amenities, parcels=parcels)

    @classmethod
    def from_file(cls, path) -> "GisDataset":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class GisApiAdapter:
    """HTTP adapter returning the fixture JSON shape for a query point."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def fetch(self, site: GeoPoint, radius: float) -> GisDataset:
        import httpx

        try:
            resp = httpx.get(
                self.base_url,
                params={"lat": site.lat, "lon": site.lon, "radius": radius},
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except Exception as exc:
            raise TransientTaskError(f"GIS API unavailable: {exc}") from exc
        return GisDataset.from_dict(resp.json())


@dataclass
class LocationReport:
    transit: TransitReport
    walkability: WalkabilityReport
    sensitive_land: str  # yes | no | unknown
    data_source: str  # api | offline_fixture


@dataclass(frozen=True)
class LocationParams:
    transit_radius: float = DEFAULT_TRANSIT_RADIUS_M
    min_trips: int = DEFAULT_MIN_WEEKDAY_TRIPS
    walk_radius: float = DEFAULT_WALK_RADIUS_M
    min_categories: int = DEFAULT_MIN_CATEGORIES


def assess_location(
    site: GeoPoint,
    dataset: Optional[GisDataset] = None,
    adapter: Optional[GisApiAdapter] = None,
    params: LocationParams = LocationParams(),
) -> LocationReport:
    """Aggregate the three sub-analyses.

    In API mode an adapter failure falls back to the offline dataset
    when one is configured (data_source reports the fallback).
    """
    if dataset is None and adapter is None:
        raise GeoConfigurationError("neither GIS fixtures nor an API adapter configured")
    data_source = "offline_fixture"
    data = dataset
    if adapter is not None:
        try:
            data = adapter.fetch(site, max(params.transit_radius, params.walk_radius))
            data_source = "api"
        except TransientTaskError:
            if dataset is None:
                raise
            data = dataset
    assert data is not None

    sensitive = "unknown"
    if data.parcels:
        hits = [
            p
            for p in data.parcels
            if point_in_polygon(site, p) in ("inside", "boundary")
        ]
        if hits:
            sensitive = "yes" if any(p.classification == "sensitive" for p in hits) else "no"
        else:
            sensitive = "no"

    return LocationReport(
        transit=transit_score(site, data.stops, params.transit_radius, params.min_trips),
        walkability=walkability_score(
            site, data.amenities, params.walk_radius, params.min_categories
        ),
        sensitive_land=sensitive,
        data_source=data_source,
    )
