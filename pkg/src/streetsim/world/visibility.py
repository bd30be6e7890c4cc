"""Pose-independent occlusion: the nearest entity in each 1-degree bearing bucket wins."""
from __future__ import annotations

import math
from typing import Iterable

from ..geo import GeoCoordinate, haversine_distance, initial_bearing

# entities closer than this to the camera have no meaningful bearing
MIN_ENTITY_DISTANCE_M = 0.5


def bearing_bucket(bearing: float) -> int:
    return math.floor(round(bearing, 6)) % 360


def unoccluded(origin: GeoCoordinate, entities: Iterable[tuple[str, GeoCoordinate]],
               visibility_range: float) -> dict[str, tuple[float, float]]:
    """Map entity id -> (distance, bearing) for every entity that survives occlusion."""
    best: dict[int, tuple[float, str, float]] = {}
    for eid, coord in entities:
        d = haversine_distance(origin, coord)
        if d > visibility_range or d < MIN_ENTITY_DISTANCE_M:
            continue
        b = initial_bearing(origin, coord)
        key = bearing_bucket(b)
        cur = best.get(key)
        if cur is None or (d, eid) < (cur[0], cur[1]):
            best[key] = (d, eid, b)
    return {eid: (d, b) for d, eid, b in best.values()}
