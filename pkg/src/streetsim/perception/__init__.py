"""Symbolic camera, perception providers, frustum matching, active detection, dedup."""
from .active import FOV_SCHEDULE, TARGET_AREA, active_detect
from .camera import (BBox, DEFAULT_VISIBILITY_RANGE_M, SymbolicView, VisibleEntity, bbox_bearing,
                     render_view, render_views, surround_poses)
from .dedup import deduplicate
from .matching import DEFAULT_FRUSTUM_RADIUS_M, MatchResult, match_proposal, match_proposal_to_place
from .providers import (MappingScorer, NoisyDetector, ObjectProposal, OracleDetector, OracleMatcher,
                        PerceptionProviderConfig, SimulatedMatcher, StorefrontScorer, build_detector,
                        detect)

__all__ = [
    "BBox", "DEFAULT_FRUSTUM_RADIUS_M", "DEFAULT_VISIBILITY_RANGE_M", "FOV_SCHEDULE", "MappingScorer",
    "MatchResult", "NoisyDetector", "ObjectProposal", "OracleDetector", "OracleMatcher",
    "PerceptionProviderConfig", "SimulatedMatcher", "StorefrontScorer", "SymbolicView", "TARGET_AREA",
    "VisibleEntity", "active_detect", "bbox_bearing", "build_detector", "deduplicate", "detect",
    "match_proposal", "match_proposal_to_place", "render_view", "render_views", "surround_poses",
]
