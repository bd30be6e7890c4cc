"""Symbolic street-view camera.

Horizontal image position is linear in angle: an entity at signed offset
``o`` from the heading lands at ``cx = 0.5 + o / fov``. Box extents are the
subtended angle over the FOV, so they scale with physical size, inversely
with distance and inversely with FOV. Pitch is ignored (city scale).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from ..geo import Pose, angular_offset, normalize_heading
from ..world import World
from ..world.visibility import bearing_bucket, unoccluded

DEFAULT_VISIBILITY_RANGE_M = 50.0
PLACE_EXTENT_M = (4.0, 8.0)  # (height, width) of a storefront facade


@dataclass(frozen=True)
class BBox:
    """Normalized (cx, cy, w, h) in image coordinates, all in [0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    def within_image(self) -> bool:
        eps = 1e-9
        return (self.cx - self.w / 2 >= -eps and self.cx + self.w / 2 <= 1 + eps
                and self.cy - self.h / 2 >= -eps and self.cy + self.h / 2 <= 1 + eps)

    def as_list(self) -> list[float]:
        return [self.cx, self.cy, self.w, self.h]


@dataclass(frozen=True)
class VisibleEntity:
    entity_id: str
    kind: str  # "place" | "instance"
    category: str
    name: str
    bbox: BBox
    distance: float
    bearing: float


@dataclass(frozen=True)
class SymbolicView:
    node_id: str
    pose: Pose
    entities: tuple[VisibleEntity, ...] = ()
    tags: tuple[str, ...] = ()

    @property
    def visible_entities(self) -> tuple[VisibleEntity, ...]:
        return self.entities


def offset_to_cx(offset: float, fov: float) -> float:
    return 0.5 + offset / fov


def cx_to_offset(cx: float, fov: float) -> float:
    return (cx - 0.5) * fov


def bbox_bearing(bbox: BBox, pose: Pose) -> float:
    """Absolute bearing of the box center."""
    return normalize_heading(pose.heading + cx_to_offset(bbox.cx, pose.fov))


def bbox_offset_interval(bbox: BBox, pose: Pose) -> tuple[float, float]:
    """Signed offsets from the heading subtended by the box's horizontal extent."""
    lo = cx_to_offset(bbox.cx - bbox.w / 2, pose.fov)
    hi = cx_to_offset(bbox.cx + bbox.w / 2, pose.fov)
    half = pose.fov / 2
    return max(lo, -half), min(hi, half)


def project(offset: float, distance: float, height_m: float, width_m: float, fov: float) -> BBox:
    cx = offset_to_cx(offset, fov)
    w = math.degrees(width_m / distance) / fov
    h = math.degrees(height_m / distance) / fov
    # symmetric clip keeps the center on the entity's bearing
    w = min(w, 2 * min(cx, 1 - cx))
    h = min(h, 1.0)
    return BBox(cx, 0.5, w, h)


def _entity_table(w: World):
    key = ("entity_table",)
    table = w._memo.get(key)
    if table is None:
        table = {}
        for pid, p in w.places.items():
            h, wd = PLACE_EXTENT_M
            table[pid] = ("place", p.primary_type, p.name, p.coord, h, wd)
        for oid, o in w.instances.items():
            table[oid] = ("instance", o.category, o.category, o.coord, o.height_m, o.width_m)
        w._memo[key] = table
    return table


def unoccluded_entities(w: World, node_id: str,
                        visibility_range: float = DEFAULT_VISIBILITY_RANGE_M) -> dict[str, tuple[float, float]]:
    """Entity id -> (distance, bearing) for everything the node can see at any heading."""
    key = ("unoccluded", node_id, float(visibility_range))
    hit = w._memo.get(key)
    if hit is not None:
        return hit
    node = w.node(node_id)
    table = _entity_table(w)
    near = [(pid, table[pid][3]) for pid, _ in w.places_within(node.coord, visibility_range)]
    near += [(oid, table[oid][3]) for oid, _ in w.instances_within(node.coord, visibility_range)]
    result = unoccluded(node.coord, near, visibility_range)
    w._memo[key] = result
    return result


def render_view(w: World, node_id: str, pose: Pose,
                visibility_range: float = DEFAULT_VISIBILITY_RANGE_M) -> SymbolicView:
    table = _entity_table(w)
    out = []
    for eid, (d, b) in unoccluded_entities(w, node_id, visibility_range).items():
        off = angular_offset(pose.heading, b)
        if abs(off) > pose.fov / 2:
            continue
        kind, category, name, _, h, wd = table[eid]
        out.append(VisibleEntity(eid, kind, category, name, project(off, d, h, wd, pose.fov), d, b))
    out.sort(key=lambda e: (e.bbox.cx, e.entity_id))
    return SymbolicView(node_id, pose, tuple(out))


def render_views(w: World, node_id: str, poses: Sequence[Pose],
                 visibility_range: float = DEFAULT_VISIBILITY_RANGE_M) -> list[SymbolicView]:
    w.node(node_id)
    return [render_view(w, node_id, p, visibility_range) for p in poses]


def surround_poses(heading: float, count: int = 4, fov: Optional[float] = None) -> list[Pose]:
    """``count`` evenly spaced poses covering the full circle."""
    fov = fov if fov is not None else min(120.0, 360.0 / count)
    return [Pose(heading=heading + k * 360.0 / count, fov=fov) for k in range(count)]


__all__ = [
    "BBox", "DEFAULT_VISIBILITY_RANGE_M", "PLACE_EXTENT_M", "SymbolicView", "VisibleEntity",
    "bbox_bearing", "bbox_offset_interval", "bearing_bucket", "cx_to_offset", "offset_to_cx",
    "project", "render_view", "render_views", "surround_poses", "unoccluded_entities",
]
