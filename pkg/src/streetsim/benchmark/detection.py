"""Localization recall: area sweeps, frustum matching and per-category recall."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from ..errors import LostTarget
from ..geo import GeoPolygon
from ..mobility.navigators import nodes_in_region
from ..perception.active import active_detect
from ..perception.camera import render_view, surround_poses, unoccluded_entities
from ..perception.dedup import deduplicate
from ..perception.matching import DEFAULT_FRUSTUM_RADIUS_M, MatchResult, match_proposal
from ..perception.providers import Detector, Matcher, ObjectProposal, detect
from ..world import World

SCORE_THRESHOLD = 0.5
SWEEP_FOV = 120.0


def recall(tp: int, fn: int) -> Optional[float]:
    return tp / (tp + fn) if tp + fn > 0 else None


@dataclass(frozen=True)
class DetectionReport:
    # category -> (N_tp, N_fn, recall or None)
    per_category: Mapping[str, tuple[int, int, Optional[float]]]
    region: str = ""

    def ar(self, subset: Optional[Iterable[str]] = None) -> Optional[float]:
        """Mean recall over ``subset`` (default: all); categories without ground truth are skipped."""
        cats = self.per_category if subset is None else list(subset)
        vals = [self.per_category[c][2] for c in cats
                if c in self.per_category and self.per_category[c][2] is not None]
        return sum(vals) / len(vals) if vals else None

    @property
    def AR(self) -> Optional[float]:
        return self.ar()

    def to_document(self) -> dict:
        return {"region": self.region, "AR": self.ar(),
                "per_category": {c: {"tp": tp, "fn": fn, "recall": r}
                                 for c, (tp, fn, r) in sorted(self.per_category.items())}}

    @classmethod
    def from_document(cls, doc: Mapping) -> "DetectionReport":
        per = {c: (v["tp"], v["fn"], v["recall"]) for c, v in doc["per_category"].items()}
        return cls(per, doc.get("region", ""))


def eval_detection(results: Sequence[MatchResult], ground_truth: Mapping[str, Iterable[str]],
                   categories: Optional[Sequence[str]] = None, region: str = "") -> DetectionReport:
    """A ground-truth entity counts as found once any proposal carrying its
    category label is matched to it."""
    cats = list(categories) if categories is not None else sorted(ground_truth)
    found: dict[str, set] = {c: set() for c in cats}
    for r in results:
        if r.matched and r.proposal.label in found:
            found[r.proposal.label].add(r.place_id)
    per = {}
    for c in cats:
        gt = set(ground_truth.get(c, ()))
        tp = len(gt & found[c])
        fn = len(gt) - tp
        per[c] = (tp, fn, recall(tp, fn))
    return DetectionReport(per, region)


def subsample_categories(categories: Sequence[str], k: int, seed: int) -> list[str]:
    """Seeded k-category subset, as used for AR^k."""
    if k > len(categories):
        raise ValueError(f"cannot take {k} of {len(categories)} categories")
    return sorted(random.Random(seed).sample(sorted(categories), k))


def _category_of(w: World, eid: str, targets: str) -> str:
    return w.places[eid].primary_type if targets == "places" else w.instances[eid].category


def visible_ground_truth(w: World, nodes: Iterable[str], categories: Sequence[str],
                         targets: str = "places",
                         radius: float = DEFAULT_FRUSTUM_RADIUS_M) -> dict[str, set[str]]:
    """Entities of the tested categories that some sweep node can see within ``radius``."""
    table = w.places if targets == "places" else w.instances
    wanted = set(categories)
    gt: dict[str, set[str]] = {c: set() for c in categories}
    for n in nodes:
        for eid in unoccluded_entities(w, n, radius):
            if eid in table:
                cat = _category_of(w, eid, targets)
                if cat in wanted:
                    gt[cat].add(eid)
    return gt


@dataclass
class SweepResult:
    matches: list[MatchResult] = field(default_factory=list)
    proposals: list[tuple[ObjectProposal, str]] = field(default_factory=list)
    lost: int = 0


def sweep(w: World, nodes: Sequence[str], categories: Sequence[str], detector: Detector,
          active: bool = False, targets: str = "places", fov: float = SWEEP_FOV,
          score_threshold: float = SCORE_THRESHOLD, radius: float = DEFAULT_FRUSTUM_RADIUS_M,
          visibility_range: float = DEFAULT_FRUSTUM_RADIUS_M) -> SweepResult:
    """Look around at every node, keep confident proposals and match them.

    Passive mode keeps proposals scoring at least ``score_threshold``. Active
    mode re-aims at every candidate first and applies the threshold to the
    refined proposal.
    """
    out = SweepResult()
    count = max(1, int(round(360.0 / fov)))
    for n in nodes:
        for pose in surround_poses(0.0, count=count, fov=fov):
            view = render_view(w, n, pose, visibility_range)
            for p in detect(view, categories, detector):
                if active:
                    try:
                        p = active_detect(w, n, p, detector, visibility_range=visibility_range)
                    except LostTarget:
                        out.lost += 1
                        continue
                if p.score < score_threshold:
                    continue
                out.proposals.append((p, n))
                out.matches.append(match_proposal(w, p, radius, targets))
    return out


def region_detection(w: World, region: GeoPolygon, categories: Sequence[str], detector: Detector,
                     active: bool = False, targets: str = "places", region_name: str = "",
                     **kw) -> DetectionReport:
    nodes = nodes_in_region(w, region)
    res = sweep(w, nodes, categories, detector, active=active, targets=targets, **kw)
    radius = kw.get("radius", DEFAULT_FRUSTUM_RADIUS_M)
    gt = visible_ground_truth(w, nodes, categories, targets, radius)
    return eval_detection(res.matches, gt, categories, region_name)


def count_instances(w: World, region: GeoPolygon, categories: Sequence[str], detector: Detector,
                    matcher: Matcher, fov: float = 90.0,
                    visibility_range: float = DEFAULT_FRUSTUM_RADIUS_M) -> dict[str, int]:
    """Sweep a region and count distinct objects per category via cross-view dedup."""
    nodes = nodes_in_region(w, region)
    res = sweep(w, nodes, categories, detector, fov=fov, score_threshold=0.0,
                visibility_range=visibility_range, targets="instances")
    counts = {c: 0 for c in categories}
    for c in categories:
        dets = [d for d in res.proposals if d[0].label == c]
        counts[c] = len(deduplicate(dets, matcher))
    return counts
