"""Re-aim the camera on a weak candidate and narrow the FOV until it is large enough."""
from __future__ import annotations

from typing import Sequence

from ..errors import LostTarget
from ..world import World
from ..world.visibility import bearing_bucket
from .camera import DEFAULT_VISIBILITY_RANGE_M, bbox_bearing, render_view
from .providers import Detector, ObjectProposal, detect

FOV_SCHEDULE = (120.0, 60.0, 30.0)
TARGET_AREA = 0.2


def active_detect(w: World, node_id: str, candidate: ObjectProposal, provider: Detector,
                  schedule: Sequence[float] = FOV_SCHEDULE, target_area: float = TARGET_AREA,
                  visibility_range: float = DEFAULT_VISIBILITY_RANGE_M) -> ObjectProposal:
    if candidate.source_node != node_id:
        raise ValueError(f"candidate was seen from {candidate.source_node}, not {node_id}")
    bearing = bbox_bearing(candidate.bbox, candidate.source_pose)
    bucket = bearing_bucket(bearing)
    fovs = [f for f in schedule if f < candidate.source_pose.fov]
    if not fovs:
        # already at the narrowest setting; still re-center
        fovs = [candidate.source_pose.fov]
    best = None
    for fov in fovs:
        pose = candidate.source_pose.replace(heading=bearing, fov=fov)
        view = render_view(w, node_id, pose, visibility_range)
        hits = [p for p in detect(view, [candidate.label], provider)
                if bearing_bucket(bbox_bearing(p.bbox, p.source_pose)) == bucket]
        if hits:
            best = max(hits, key=lambda p: (p.score, p.bbox.area, -abs(p.bbox.cx - 0.5)))
            if best.bbox.area >= target_area:
                break
    if best is None:
        raise LostTarget(f"nothing matching the candidate after re-aiming at {bearing:.2f} deg")
    return best
