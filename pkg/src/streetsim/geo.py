"""Spherical geometry on a mean-radius Earth.

Angles are exchanged in degrees; radians only appear inside computations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CoincidentPoints, InvalidGeometry

EARTH_RADIUS_M = 6_371_008.8

FOV_MIN = 20.0
FOV_MAX = 120.0


def normalize_lng(lng: float) -> float:
    lng = ((lng + 180.0) % 360.0) - 180.0
    # float modulo can land exactly on the open end
    return -180.0 if lng >= 180.0 else lng


def normalize_heading(heading: float) -> float:
    h = heading % 360.0
    return 0.0 if h >= 360.0 else h


@dataclass(frozen=True, order=True)
class GeoCoordinate:
    lat: float
    lng: float

    def __post_init__(self):
        lat, lng = float(self.lat), float(self.lng)
        if not (math.isfinite(lat) and math.isfinite(lng)):
            raise InvalidGeometry(f"non-finite coordinate ({lat}, {lng})")
        if not -90.0 <= lat <= 90.0:
            raise InvalidGeometry(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lng", normalize_lng(lng))

    def __iter__(self):
        yield self.lat
        yield self.lng


@dataclass(frozen=True)
class Pose:
    """Camera orientation of a street-view capture."""

    heading: float = 0.0
    pitch: float = 0.0
    fov: float = 90.0

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(float(self.heading)))
        pitch, fov = float(self.pitch), float(self.fov)
        if not -90.0 <= pitch <= 90.0:
            raise InvalidGeometry(f"pitch {pitch} outside [-90, 90]")
        if not FOV_MIN <= fov <= FOV_MAX:
            raise InvalidGeometry(f"fov {fov} outside [{FOV_MIN}, {FOV_MAX}]")
        object.__setattr__(self, "pitch", pitch)
        object.__setattr__(self, "fov", fov)

    def replace(self, **changes) -> "Pose":
        values = {"heading": self.heading, "pitch": self.pitch, "fov": self.fov}
        values.update(changes)
        return Pose(**values)


def haversine_distance(a: GeoCoordinate, b: GeoCoordinate) -> float:
    """Great-circle distance in meters."""
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlat = lat2 - lat1
    dlng = math.radians(b.lng - a.lng)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlng / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing(a: GeoCoordinate, b: GeoCoordinate) -> float:
    """Forward azimuth from ``a`` to ``b`` in [0, 360), 0 = north, 90 = east."""
    if a == b:
        raise CoincidentPoints(f"bearing undefined for coincident points {a}")
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlng = math.radians(b.lng - a.lng)
    y = math.sin(dlng) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlng)
    return normalize_heading(math.degrees(math.atan2(y, x)))


def destination_point(origin: GeoCoordinate, heading: float, distance: float) -> GeoCoordinate:
    if distance < 0:
        raise InvalidGeometry("distance must be non-negative")
    if distance == 0:
        return origin
    delta = distance / EARTH_RADIUS_M
    theta = math.radians(heading)
    lat1, lng1 = math.radians(origin.lat), math.radians(origin.lng)
    sin_lat2 = math.sin(lat1) * math.cos(delta) + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    lat2 = math.asin(max(-1.0, min(1.0, sin_lat2)))
    y = math.sin(theta) * math.sin(delta) * math.cos(lat1)
    x = math.cos(delta) - math.sin(lat1) * sin_lat2
    lng2 = lng1 + math.atan2(y, x)
    return GeoCoordinate(math.degrees(lat2), math.degrees(lng2))


def angular_offset(reference_heading: float, target_bearing: float) -> float:
    """Signed turn from reference to target in [-180, 180); positive is clockwise."""
    off = ((target_bearing - reference_heading + 180.0) % 360.0) - 180.0
    return -180.0 if off >= 180.0 else off


class LocalFrame:
    """Equirectangular east/north meters around an origin.

    Only meant for city-scale layout work (world synthesis, polygon tests);
    distances that matter are always recomputed on the sphere.
    """

    def __init__(self, origin: GeoCoordinate):
        self.origin = origin
        self._m_per_deg_lat = math.radians(1.0) * EARTH_RADIUS_M
        self._m_per_deg_lng = self._m_per_deg_lat * math.cos(math.radians(origin.lat))

    def to_xy(self, c: GeoCoordinate) -> tuple[float, float]:
        dlng = angular_offset(self.origin.lng, c.lng)
        return dlng * self._m_per_deg_lng, (c.lat - self.origin.lat) * self._m_per_deg_lat

    def to_coord(self, x: float, y: float) -> GeoCoordinate:
        return GeoCoordinate(self.origin.lat + y / self._m_per_deg_lat,
                             self.origin.lng + x / self._m_per_deg_lng)


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1 = _orient(*p3, *p4, *p1)
    d2 = _orient(*p3, *p4, *p2)
    d3 = _orient(*p1, *p2, *p3)
    d4 = _orient(*p1, *p2, *p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4)


@dataclass(frozen=True)
class GeoPolygon:
    """Simple polygon in (lat, lng) treated as planar at city scale."""

    vertices: tuple[GeoCoordinate, ...]

    def __post_init__(self):
        verts = tuple(v if isinstance(v, GeoCoordinate) else GeoCoordinate(*v) for v in self.vertices)
        if len(verts) >= 2 and verts[0] == verts[-1]:
            verts = verts[:-1]
        if len(verts) < 3:
            raise InvalidGeometry("polygon needs at least 3 distinct vertices")
        object.__setattr__(self, "vertices", verts)
        if self.area_deg2() <= 0:
            raise InvalidGeometry("polygon has zero area")
        pts = self._planar()
        n = len(pts)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                    raise InvalidGeometry("polygon edges self-intersect")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "GeoPolygon":
        return cls(tuple(GeoCoordinate(lat, lng) for lat, lng in pairs))

    @classmethod
    def rectangle(cls, south: float, west: float, north: float, east: float) -> "GeoPolygon":
        return cls.from_pairs([(south, west), (south, east), (north, east), (north, west)])

    def _planar(self) -> list[tuple[float, float]]:
        # x = lng, y = lat; unwrap longitudes around the first vertex
        ref = self.vertices[0].lng
        return [(ref + angular_offset(ref, v.lng), v.lat) for v in self.vertices]

    def area_deg2(self) -> float:
        pts = self._planar()
        s = 0.0
        for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
            s += x1 * y2 - x2 * y1
        return abs(s) / 2.0

    def bounds(self) -> tuple[float, float, float, float]:
        """(south, west, north, east)."""
        pts = self._planar()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return min(ys), min(xs), max(ys), max(xs)

    def centroid(self) -> GeoCoordinate:
        pts = self._planar()
        return GeoCoordinate(sum(p[1] for p in pts) / len(pts), sum(p[0] for p in pts) / len(pts))

    def to_pairs(self) -> list[list[float]]:
        return [[v.lat, v.lng] for v in self.vertices]


def point_in_polygon(p: GeoCoordinate, poly: GeoPolygon) -> bool:
    """Winding-number containment; points on the boundary count as inside."""
    pts = poly._planar()
    ref = poly.vertices[0].lng
    px, py = ref + angular_offset(ref, p.lng), p.lat
    winding = 0
    n = len(pts)
    for i in range(n):
        (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % n]
        cross = _orient(x1, y1, x2, y2, px, py)
        if (cross == 0 and min(x1, x2) <= px <= max(x1, x2)
                and min(y1, y2) <= py <= max(y1, y2)):
            return True
        if y1 <= py:
            if y2 > py and cross > 0:
                winding += 1
        elif y2 <= py and cross < 0:
            winding -= 1
    return winding != 0
