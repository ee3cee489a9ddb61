import json
import math
import random

import pytest

from leedwork.geo import (
    Amenity,
    GeoConfigurationError,
    GeoPoint,
    GisApiAdapter,
    GisDataset,
    LocationParams,
    ParcelPolygon,
    TransitStop,
    assess_location,
    haversine_distance,
    point_in_polygon,
    transit_score,
    walkability_score,
)
from leedwork.orchestrator import TransientTaskError


# -- haversine -----------------------------------------------------------------


def test_one_degree_at_equator():
    d = haversine_distance(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0))
    assert d == pytest.approx(111195.08, abs=0.01)


def test_zero_distance():
    p = GeoPoint(37.5665, 126.978)
    assert haversine_distance(p, p) == 0.0


def test_antipodal_does_not_blow_up():
    d = haversine_distance(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0))
    assert d == pytest.approx(math.pi * 6_371_008.8, rel=1e-12)


def test_symmetry_and_triangle_inequality():
    rng = random.Random(23)
    for _ in range(100):
        pts = [
            GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179)) for _ in range(3)
        ]
        a, b, c = pts
        assert haversine_distance(a, b) == pytest.approx(haversine_distance(b, a), rel=1e-12)
        assert haversine_distance(a, c) <= (
            haversine_distance(a, b) + haversine_distance(b, c) + 1e-6
        )


def test_geopoint_validation():
    with pytest.raises(ValueError):
        GeoPoint(91.0, 0.0)
    with pytest.raises(ValueError):
        GeoPoint(0.0, 181.0)


# -- transit / walkability -------------------------------------------------------


SITE = GeoPoint(37.5665, 126.978)


def offset_north(site: GeoPoint, meters: float) -> GeoPoint:
    return GeoPoint(site.lat + meters / 111195.08, site.lon)


def test_transit_score_radius_is_closed():
    near = TransitStop(offset_north(SITE, 399.0), weekday_trips=40)
    far = TransitStop(offset_north(SITE, 401.0), weekday_trips=500)
    report = transit_score(SITE, [near, far], radius=400.0, min_trips=72)
    assert report.stops_within == 1
    assert report.total_trips == 40
    assert not report.qualifies
    report2 = transit_score(SITE, [near, near], radius=400.0, min_trips=72)
    assert report2.qualifies  # 80 trips total


def test_walkability_counts_distinct_categories():
    amenities = [
        Amenity(offset_north(SITE, 100), "grocery"),
        Amenity(offset_north(SITE, 200), "grocery"),
        Amenity(offset_north(SITE, 300), "pharmacy"),
        Amenity(offset_north(SITE, 9000), "park"),
    ]
    report = walkability_score(SITE, amenities, radius=800.0, min_categories=4)
    assert report.categories_within == 2
    assert not report.qualifies


def test_radius_validation():
    with pytest.raises(ValueError):
        transit_score(SITE, [], radius=0.0)
    with pytest.raises(ValueError):
        walkability_score(SITE, [], radius=-1.0)


# -- point in polygon --------------------------------------------------------------


def square(center: GeoPoint, half_deg: float = 0.01) -> ParcelPolygon:
    lat, lon = center.lat, center.lon
    return ParcelPolygon(
        ring=(
            GeoPoint(lat - half_deg, lon - half_deg),
            GeoPoint(lat - half_deg, lon + half_deg),
            GeoPoint(lat + half_deg, lon + half_deg),
            GeoPoint(lat + half_deg, lon - half_deg),
        )
    )


def test_point_in_polygon_basic():
    poly = square(GeoPoint(37.0, 127.0))
    assert point_in_polygon(GeoPoint(37.0, 127.0), poly) == "inside"
    assert point_in_polygon(GeoPoint(37.02, 127.0), poly) == "outside"
    # exactly on an edge
    assert point_in_polygon(GeoPoint(37.01, 127.0), poly) == "boundary"
    # vertex counts as boundary
    assert point_in_polygon(GeoPoint(37.01, 127.01), poly) == "boundary"


def test_polygon_needs_three_distinct_vertices():
    with pytest.raises(ValueError):
        ParcelPolygon(ring=(GeoPoint(0, 0), GeoPoint(0, 1), GeoPoint(0, 0)))


def _winding_oracle(px, py, pts) -> bool:
    """Independent inside test: total signed angle ~ +-2pi inside, 0 outside."""
    total = 0.0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
        a1 = math.atan2(y1 - py, x1 - px)
        a2 = math.atan2(y2 - py, x2 - px)
        da = a2 - a1
        while da > math.pi:
            da -= 2 * math.pi
        while da < -math.pi:
            da += 2 * math.pi
        total += da
    return abs(total) > math.pi


def test_point_in_polygon_matches_winding_oracle_on_convex_polygons():
    rng = random.Random(31)
    checked = 0
    while checked < 500:
        lat0 = rng.uniform(-60, 60)
        lon0 = rng.uniform(-170, 170)
        radius = rng.uniform(0.005, 0.05)
        n = rng.randint(3, 9)
        angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
        if min(b - a for a, b in zip(angles, angles[1:])) < 1e-3:
            continue
        ring = tuple(
            GeoPoint(lat0 + radius * math.sin(t), lon0 + radius * math.cos(t))
            for t in angles
        )
        poly = ParcelPolygon(ring=ring)
        p = GeoPoint(
            lat0 + rng.uniform(-1.5, 1.5) * radius,
            lon0 + rng.uniform(-1.5, 1.5) * radius,
        )
        verdict = point_in_polygon(p, poly)
        if verdict == "boundary":
            continue  # oracle is for strict inside/outside only
        # replicate the same local projection the implementation uses
        closed = poly.closed_ring()
        latc = sum(v.lat for v in closed[:-1]) / (len(closed) - 1)
        scale = math.cos(math.radians(latc))
        pts = [(v.lon * scale, v.lat) for v in closed]
        want = _winding_oracle(p.lon * scale, p.lat, pts)
        assert (verdict == "inside") == want
        checked += 1


# -- datasets and assessment ---------------------------------------------------------


def fixture_doc() -> dict:
    return {
        "stops": [
            {"lat": SITE.lat + 0.0018, "lon": SITE.lon, "weekday_trips": 40},
            {"lat": SITE.lat, "lon": SITE.lon + 0.004, "weekday_trips": 40,
             "modes": ["bus", "rail"]},
        ],
        "amenities": [
            {"lat": SITE.lat + 0.001, "lon": SITE.lon, "category": "grocery"},
            {"lat": SITE.lat - 0.001, "lon": SITE.lon, "category": "pharmacy"},
            {"lat": SITE.lat, "lon": SITE.lon + 0.002, "category": "restaurant"},
            {"lat": SITE.lat, "lon": SITE.lon - 0.002, "category": "park"},
        ],
        "parcels": [
            {
                "ring": [
                    {"lat": SITE.lat - 0.01, "lon": SITE.lon - 0.01},
                    {"lat": SITE.lat - 0.01, "lon": SITE.lon + 0.01},
                    {"lat": SITE.lat + 0.01, "lon": SITE.lon + 0.01},
                    {"lat": SITE.lat + 0.01, "lon": SITE.lon - 0.01},
                ],
                "classification": "ordinary",
            }
        ],
    }


def test_dataset_from_file(tmp_path):
    path = tmp_path / "gis.json"
    path.write_text(json.dumps(fixture_doc()))
    data = GisDataset.from_file(path)
    assert len(data.stops) == 2
    assert "rail" in data.stops[1].modes
    assert len(data.amenities) == 4
    assert data.parcels[0].classification == "ordinary"


def test_assess_location_offline():
    data = GisDataset.from_dict(fixture_doc())
    report = assess_location(SITE, dataset=data)
    assert report.data_source == "offline_fixture"
    assert report.transit.qualifies  # 80 trips within 400 m
    assert report.walkability.qualifies  # 4 categories within 800 m
    assert report.sensitive_land == "no"


def test_assess_location_sensitive_parcel():
    doc = fixture_doc()
    doc["parcels"][0]["classification"] = "sensitive"
    report = assess_location(SITE, dataset=GisDataset.from_dict(doc))
    assert report.sensitive_land == "yes"


def test_assess_location_no_parcels_is_unknown():
    doc = fixture_doc()
    doc["parcels"] = []
    report = assess_location(SITE, dataset=GisDataset.from_dict(doc))
    assert report.sensitive_land == "unknown"


def test_assess_location_requires_some_source():
    with pytest.raises(GeoConfigurationError):
        assess_location(SITE)


def test_api_failure_falls_back_to_fixture():
    adapter = GisApiAdapter("http://127.0.0.1:1/gis", timeout=0.05)
    data = GisDataset.from_dict(fixture_doc())
    report = assess_location(SITE, dataset=data, adapter=adapter)
    assert report.data_source == "offline_fixture"
    with pytest.raises(TransientTaskError):
        assess_location(SITE, adapter=adapter)


def test_bundled_fixture_city():
    from leedwork.config import Config

    data = GisDataset.from_file(Config().gis_path)
    report = assess_location(SITE, dataset=data, params=LocationParams())
    assert report.transit.qualifies
    assert report.walkability.qualifies
    assert report.sensitive_land == "no"
