"""Assign a 2D proposal to the nearest place inside its viewing frustum."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..geo import angular_offset, initial_bearing
from ..world import World
from ..world.visibility import MIN_ENTITY_DISTANCE_M
from .camera import bbox_offset_interval
from .providers import ObjectProposal

DEFAULT_FRUSTUM_RADIUS_M = 30.0
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class MatchResult:
    proposal: ObjectProposal
    place_id: Optional[str] = None
    distance: Optional[float] = None

    @property
    def matched(self) -> bool:
        return self.place_id is not None

    @property
    def outcome(self) -> str:
        return "matched" if self.matched else "false_positive"


def match_proposal(w: World, p: ObjectProposal, radius: float = DEFAULT_FRUSTUM_RADIUS_M,
                   targets: str = "places") -> MatchResult:
    """Nearest target within ``radius`` whose bearing falls inside the box's horizontal span.

    Targets are ``places`` or object ``instances``. Anything behind the camera
    or outside the FOV never matches. Equal distances resolve to the smallest
    id, so the result does not depend on storage order.
    """
    if targets == "places":
        near, table = w.places_within, w.places
    elif targets == "instances":
        near, table = w.instances_within, w.instances
    else:
        raise ValueError(f"unknown match targets {targets!r}")
    origin = w.node(p.source_node).coord
    lo, hi = bbox_offset_interval(p.bbox, p.source_pose)
    half = p.source_pose.fov / 2
    best = None
    for eid, d in near(origin, radius):
        if d < MIN_ENTITY_DISTANCE_M:
            continue
        off = angular_offset(p.source_pose.heading, initial_bearing(origin, table[eid].coord))
        if abs(off) > half + _EDGE_EPS or not (lo - _EDGE_EPS <= off <= hi + _EDGE_EPS):
            continue
        if best is None or (d, eid) < best:
            best = (d, eid)
    if best is None:
        return MatchResult(p)
    return MatchResult(p, best[1], best[0])


def match_proposal_to_place(w: World, p: ObjectProposal,
                            radius: float = DEFAULT_FRUSTUM_RADIUS_M) -> MatchResult:
    return match_proposal(w, p, radius, "places")
