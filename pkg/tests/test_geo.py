import math

import pytest
from hypothesis import given, strategies as st
from shapely.geometry import Point, Polygon

from streetsim.errors import CoincidentPoints, InvalidGeometry
from streetsim.geo import (EARTH_RADIUS_M, GeoCoordinate, GeoPolygon, Pose, angular_offset,
                           destination_point, haversine_distance, initial_bearing, point_in_polygon)

lat = st.floats(-80, 80)
lng = st.floats(-179.9, 179.9)
heading = st.floats(0, 359.999)


def test_one_degree_of_latitude():
    d = haversine_distance(GeoCoordinate(0, 0), GeoCoordinate(1, 0))
    assert d == pytest.approx(EARTH_RADIUS_M * math.pi / 180, rel=1e-12)


def test_quarter_equator():
    d = haversine_distance(GeoCoordinate(0, 0), GeoCoordinate(0, 90))
    assert d == pytest.approx(EARTH_RADIUS_M * math.pi / 2, rel=1e-12)


def test_antipodes():
    d = haversine_distance(GeoCoordinate(10, 20), GeoCoordinate(-10, -160))
    # asin is ill-conditioned next to 1, so antipodal accuracy is ~1e-8
    assert d == pytest.approx(math.pi * EARTH_RADIUS_M, rel=1e-7)


def test_cardinal_bearings():
    o = GeoCoordinate(0, 0)
    assert initial_bearing(o, GeoCoordinate(1, 0)) == pytest.approx(0.0)
    assert initial_bearing(o, GeoCoordinate(0, 1)) == pytest.approx(90.0)
    assert initial_bearing(o, GeoCoordinate(-1, 0)) == pytest.approx(180.0)
    assert initial_bearing(o, GeoCoordinate(0, -1)) == pytest.approx(270.0)


def test_bearing_across_dateline():
    assert initial_bearing(GeoCoordinate(0, 179.5), GeoCoordinate(0, -179.5)) == pytest.approx(90.0)


def test_bearing_of_coincident_points_raises():
    with pytest.raises(CoincidentPoints):
        initial_bearing(GeoCoordinate(1, 1), GeoCoordinate(1, 1))


def test_destination_quarter_equator():
    p = destination_point(GeoCoordinate(0, 0), 90.0, EARTH_RADIUS_M * math.pi / 2)
    assert p.lat == pytest.approx(0.0, abs=1e-9)
    assert p.lng == pytest.approx(90.0, abs=1e-9)


def test_longitude_wraps():
    assert GeoCoordinate(0, 190).lng == pytest.approx(-170)
    assert GeoCoordinate(0, 180).lng == -180.0


@pytest.mark.parametrize("bad", [(91, 0), (-90.5, 0), (float("nan"), 0), (0, float("inf"))])
def test_invalid_coordinates(bad):
    with pytest.raises(InvalidGeometry):
        GeoCoordinate(*bad)


@pytest.mark.parametrize("ref,target,expected", [
    (0, 90, 90), (0, 270, -90), (350, 10, 20), (10, 350, -20), (0, 180, -180), (90, 270, -180),
])
def test_angular_offset_examples(ref, target, expected):
    assert angular_offset(ref, target) == pytest.approx(expected)


@given(heading, heading)
def test_angular_offset_range_and_inverse(a, b):
    off = angular_offset(a, b)
    assert -180 <= off < 180
    r = (a + off - b) % 360
    assert min(r, 360 - r) < 1e-6


@given(lat, lng, heading, st.floats(1, 50_000))
def test_destination_roundtrip(la, ln, h, d):
    o = GeoCoordinate(la, ln)
    p = destination_point(o, h, d)
    assert haversine_distance(o, p) == pytest.approx(d, rel=1e-6, abs=1e-3)
    assert abs(angular_offset(h, initial_bearing(o, p))) < 1e-4


@given(lat, lng, lat, lng)
def test_haversine_symmetric(a1, b1, a2, b2):
    p, q = GeoCoordinate(a1, b1), GeoCoordinate(a2, b2)
    assert haversine_distance(p, q) == pytest.approx(haversine_distance(q, p), abs=1e-6)


def test_pose_limits():
    assert Pose(heading=-90).heading == 270
    with pytest.raises(InvalidGeometry):
        Pose(fov=10)
    with pytest.raises(InvalidGeometry):
        Pose(fov=150)


def test_polygon_rejects_degenerate_and_bowtie():
    with pytest.raises(InvalidGeometry):
        GeoPolygon.from_pairs([(0, 0), (0, 1)])
    with pytest.raises(InvalidGeometry):
        GeoPolygon.from_pairs([(0, 0), (1, 1), (0, 1), (1, 0)])


def test_boundary_counts_as_inside():
    sq = GeoPolygon.rectangle(0, 0, 1, 1)
    assert point_in_polygon(GeoCoordinate(0, 0.5), sq)
    assert point_in_polygon(GeoCoordinate(1, 1), sq)
    assert not point_in_polygon(GeoCoordinate(1.0001, 0.5), sq)


L_SHAPE = [(0, 0), (0, 2), (1, 2), (1, 1), (2, 1), (2, 0)]


@given(st.floats(-0.5, 2.5), st.floats(-0.5, 2.5))
def test_point_in_polygon_matches_shapely(y, x):
    poly = GeoPolygon.from_pairs(L_SHAPE)
    ref = Polygon([(b, a) for a, b in L_SHAPE])
    c = GeoCoordinate(y, x)
    assert point_in_polygon(c, poly) == ref.covers(Point(c.lng, c.lat))
