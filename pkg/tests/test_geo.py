import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from geostream.geo import (
    Region,
    RegionClass,
    bbox_intersects,
    classify_many,
    classify_region,
    load_region,
    partition_report,
    point_in_bbox,
    point_in_region,
    points_in_region,
    region_to_geojson,
    streaming_match,
)
from geostream.records import BBox, GeoPoint, GeometryError

from conftest import make_tweet
from oracles.winding import inside_even_odd_by_winding

def _segment_distance(x, y, a, b):
    (x1, y1), (x2, y2) = a, b
    dx, dy = x2 - x1, y2 - y1
    t = max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / (dx * dx + dy * dy)))
    return ((x - x1 - t * dx) ** 2 + (y - y1 - t * dy) ** 2) ** 0.5


UNIT = Region("unit", (((0, 0), (1, 0), (1, 1), (0, 1), (0, 0)),))
HOLED = Region("holed", (
    ((0, 0), (4, 0), (4, 4), (0, 4), (0, 0)),
    ((1, 1), (3, 1), (3, 3), (1, 3), (1, 1)),
))
B = BBox(-1, -1, 1, 1)
CALIFORNIA_BOX = (-124.48, 32.53, -114.13, 42.01)
SD_BOX = BBox(-117.6, 32.53, -116.08, 33.51)


class TestBBox:
    @pytest.mark.parametrize("p, expected", [((0, 0), True), ((1, 1), True), ((2, 0), False)])
    def test_point_in_bbox(self, p, expected):
        assert point_in_bbox(GeoPoint(*p), B) is expected

    @pytest.mark.parametrize("a, b, expected", [
        ((0, 0, 2, 2), (1, 1, 3, 3), True),
        ((0, 0, 1, 1), (1, 1, 2, 2), True),
        ((0, 0, 1, 1), (2, 2, 3, 3), False),
    ])
    def test_intersects(self, a, b, expected):
        assert bbox_intersects(BBox(*a), BBox(*b)) is expected
        assert bbox_intersects(BBox(*b), BBox(*a)) is expected

    def test_parse_and_reject(self):
        assert BBox.parse("-117.6, 32.53, -116.08, 33.51") == SD_BOX
        for bad in ("1,2,3", "a,b,c,d", "170,0,-170,1", "0,5,1,4", "0,0,181,1"):
            with pytest.raises(GeometryError):
                BBox.parse(bad)


class TestPolygon:
    def test_interior(self):
        assert point_in_region(GeoPoint(0.5, 0.5), UNIT)

    def test_on_edge_and_vertex(self):
        assert point_in_region(GeoPoint(1.0, 0.5), UNIT)
        assert point_in_region(GeoPoint(0.0, 0.0), UNIT)
        assert point_in_region(GeoPoint(1.0, 2.0), HOLED)  # hole boundary

    def test_hole_centre_matches_winding_oracle(self):
        rings = [list(r) for r in HOLED.rings]
        assert inside_even_odd_by_winding(2.0, 2.0, rings) is False
        assert point_in_region(GeoPoint(2.0, 2.0 + 0.5), HOLED) is False
        assert point_in_region(GeoPoint(2, 2), Region("h", HOLED.rings[1:])) is True
        assert point_in_region(GeoPoint(0.5, 2.0), HOLED) is inside_even_odd_by_winding(0.5, 2.0, rings)

    def test_ring_validation(self):
        with pytest.raises(GeometryError):
            Region("bad", (((0, 0), (1, 0), (0, 0)),))
        with pytest.raises(GeometryError):
            Region("open", (((0, 0), (1, 0), (1, 1), (0, 1)),))

    def test_bbox_covers_vertices(self):
        r = load_region("san-diego-county")
        for x, y in r.vertices():
            assert point_in_bbox(GeoPoint(x, y), r.bbox)

    @given(st.floats(-1, 5), st.floats(-1, 5))
    def test_holed_even_odd_agrees_with_winding(self, x, y):
        rings = [list(r) for r in HOLED.rings]
        # the angle-sum oracle is ill-conditioned within rounding distance of an edge
        near_edge = any(
            _segment_distance(x, y, a, b) < 1e-9 for r in rings for a, b in zip(r, r[1:])
        )
        assume(not near_edge)
        assert point_in_region(GeoPoint(x, y), HOLED) == inside_even_odd_by_winding(x, y, rings)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(3)
        r = load_region("california")
        lons = np.round(rng.uniform(-126, -113, 4000), 2)
        lats = np.round(rng.uniform(31, 43, 4000), 2)
        # include every vertex exactly
        vx, vy = zip(*r.vertices())
        lons = np.concatenate([lons, vx])
        lats = np.concatenate([lats, vy])
        vec = points_in_region(lons, lats, r)
        scalar = [point_in_region(GeoPoint(float(x), float(y)), r) for x, y in zip(lons, lats)]
        assert vec.tolist() == scalar


class TestStreamingMatch:
    def test_rule_one(self):
        assert streaming_match(make_tweet(lonlat=(-117.1, 32.7)), SD_BOX)

    def test_rule_one_ignores_place(self):
        t = make_tweet(lonlat=(-100, 40), place=CALIFORNIA_BOX)
        assert not streaming_match(t, SD_BOX)

    def test_place_leakage(self):
        assert streaming_match(make_tweet(place=CALIFORNIA_BOX), SD_BOX)

    def test_geo_is_ignored(self):
        assert not streaming_match(make_tweet(geo=(-117.1, 32.7)), SD_BOX)

    @given(st.floats(-170, 170), st.floats(-80, 80), st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
    def test_monotone_in_box_size(self, x, y, grow, px, py):
        small = BBox(-117.6, 32.5, -116.0, 33.5)
        big = BBox(max(-180, small.west - grow), max(-90, small.south - grow),
                   min(180, small.east + grow), min(90, small.north + grow))
        for t in (make_tweet(lonlat=(x, y)),
                  make_tweet(place=(x, y, min(180, x + px), min(90, y + py)))):
            if streaming_match(t, small):
                assert streaming_match(t, big)


class TestClassify:
    def test_classes(self):
        sd, ca = load_region("san-diego-county"), load_region("california")
        assert classify_region(make_tweet(lonlat=(-117.1, 32.8)), sd, ca) is RegionClass.IN_TARGET
        assert classify_region(make_tweet(lonlat=(-118.2, 34.05)), sd, ca) is RegionClass.IN_PARENT_ONLY
        assert classify_region(make_tweet(lonlat=(-74.0, 40.7)), sd, ca) is RegionClass.ELSEWHERE
        assert classify_region(make_tweet(), sd, ca) is RegionClass.NO_LOCATION
        geo_only = make_tweet(geo=(-117.1, 32.8))
        assert classify_region(geo_only, sd, ca) is RegionClass.NO_LOCATION
        assert classify_region(geo_only, sd, ca, "coordinates-then-geo") is RegionClass.IN_TARGET

    def test_batch_matches_scalar(self, sd_generated):
        spec = sd_generated.spec
        sample = sd_generated.tweets[::37]
        for policy in ("coordinates-only", "coordinates-then-geo"):
            batch = classify_many(sample, spec.target, spec.parent, policy)
            assert batch == [classify_region(t, spec.target, spec.parent, policy) for t in sample]

    def test_leakage_property(self):
        sd, ca = load_region("san-diego-county"), load_region("california")
        box = (ca.bbox.west, ca.bbox.south, ca.bbox.east, ca.bbox.north)
        corpus = [make_tweet(id=i, place=box) for i in range(1000)]
        assert all(streaming_match(t, sd.bbox) for t in corpus)
        rep = partition_report(corpus, sd, ca)
        assert rep.counts[RegionClass.IN_TARGET] == 0


class TestPartitionReport:
    def test_empty(self):
        rep = partition_report([], UNIT)
        assert rep.total == 0
        assert all(v["count"] == 0 and v["percent"] == "–" for v in rep.to_dict()["classes"].values())

    def test_all_in_target(self):
        rep = partition_report([make_tweet(id=i, lonlat=(0.5, 0.5)) for i in range(10)], UNIT)
        assert rep.percent(RegionClass.IN_TARGET) == "100.0%"

    def test_columbus_preset(self, cmh_generated):
        spec = cmh_generated.spec
        rep = partition_report(cmh_generated.tweets, spec.target, spec.parent, "coordinates-then-geo")
        d = rep.to_dict()["classes"]
        assert [d[c]["count"] for c in ("InTarget", "InParentOnly", "Elsewhere")] == [53291, 10043, 236]
        assert [d[c]["percent"] for c in ("InTarget", "InParentOnly", "Elsewhere")] == ["83.8%", "15.8%", "0.4%"]
        assert rep.total == 63570

    def test_markdown_layout(self, sd_generated):
        spec = sd_generated.spec
        md = partition_report(sd_generated.tweets, spec.target, spec.parent, "coordinates-then-geo").to_markdown()
        assert "| Tweets in San Diego County | 97944 | 42.7% |" in md
        assert "| Total Tweets | 229408 | |" in md

    @given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)) | st.none(), max_size=30))
    def test_completeness(self, pts):
        corpus = [make_tweet(id=i, lonlat=p) for i, p in enumerate(pts)]
        rep = partition_report(corpus, UNIT, Region("p", (((-1, -1), (1.5, -1), (1.5, 1.5), (-1, 1.5), (-1, -1)),)))
        assert rep.total == len(corpus)


def test_geojson_round_trip(tmp_path):
    r = load_region("columbus-city")
    p = tmp_path / "r.geojson"
    p.write_text(json.dumps(region_to_geojson(r)))
    again = load_region(p)
    assert again.rings == r.rings and again.name == r.name and again.parent_name == r.parent_name


def test_multipolygon_and_missing_file(tmp_path):
    geom = {"type": "MultiPolygon", "coordinates": [
        [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]],
        [[[5, 5], [6, 5], [6, 6], [5, 6], [5, 5]]],
    ]}
    p = tmp_path / "m.geojson"
    p.write_text(json.dumps({"type": "Feature", "properties": {"name": "two"}, "geometry": geom}))
    r = load_region(p)
    assert point_in_region(GeoPoint(5.5, 5.5), r) and not point_in_region(GeoPoint(3, 3), r)
    with pytest.raises(OSError):
        load_region(tmp_path / "missing.geojson")
