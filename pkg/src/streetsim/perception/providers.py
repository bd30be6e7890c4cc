"""Perception providers: oracle, seeded noise model, or an external endpoint.

Every provider satisfies a small structural protocol so callers never care
which kind they hold.
"""
from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Protocol, Sequence, runtime_checkable

from ..canonical import stable_seed
from ..errors import ProviderError
from ..geo import Pose
from .camera import BBox, SymbolicView


@dataclass(frozen=True)
class ObjectProposal:
    bbox: BBox
    label: str
    score: float
    source_node: str
    source_pose: Pose
    # ground-truth entity behind the proposal; None for false positives and
    # for anything an external detector returns
    entity_id: Optional[str] = None

    def __post_init__(self):
        if not self.bbox.within_image():
            raise ValueError(f"bbox {self.bbox} leaves the image")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def source_view(self) -> tuple[str, Pose]:
        return self.source_node, self.source_pose

    def to_document(self) -> dict:
        return {"bbox": self.bbox.as_list(), "label": self.label, "score": self.score,
                "source_node": self.source_node,
                "source_pose": {"heading": self.source_pose.heading, "pitch": self.source_pose.pitch,
                                "fov": self.source_pose.fov},
                "entity_id": self.entity_id}

    @classmethod
    def from_document(cls, doc: Mapping) -> "ObjectProposal":
        pose = doc["source_pose"]
        return cls(BBox(*map(float, doc["bbox"])), str(doc["label"]), float(doc["score"]),
                   str(doc["source_node"]), Pose(pose["heading"], pose.get("pitch", 0.0), pose["fov"]),
                   doc.get("entity_id"))


@runtime_checkable
class Detector(Protocol):
    def detect(self, view: SymbolicView, categories: Sequence[str]) -> list[ObjectProposal]:
        ...


@runtime_checkable
class Matcher(Protocol):
    def match(self, a: ObjectProposal, b: ObjectProposal) -> tuple[bool, float]:
        ...


@runtime_checkable
class Chooser(Protocol):
    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        ...


@runtime_checkable
class ImageScorer(Protocol):
    def score(self, image_ref: str) -> float:
        ...


def detect(view: SymbolicView, categories: Sequence[str], provider: Detector) -> list[ObjectProposal]:
    """Run ``provider`` on ``view`` and validate what comes back."""
    out = provider.detect(view, list(categories))
    if not isinstance(out, list) or not all(isinstance(p, ObjectProposal) for p in out):
        raise ProviderError("detector returned something other than a list of proposals")
    return out


def _requested_label(entity, wanted: Sequence[str]) -> Optional[str]:
    if entity.category in wanted:
        return entity.category
    if entity.name in wanted:
        return entity.name
    return None


class OracleDetector:
    """Returns exactly the visible entities of the requested categories (or names)."""

    def detect(self, view: SymbolicView, categories: Sequence[str]) -> list[ObjectProposal]:
        out = []
        for e in view.entities:
            label = _requested_label(e, categories)
            if label is not None:
                out.append(ObjectProposal(e.bbox, label, 1.0, view.node_id, view.pose, e.entity_id))
        return out


def piecewise_linear(points: Sequence[tuple[float, float]], x: float) -> float:
    """Interpolate through sorted (x, y) points; constant beyond either end."""
    xs = [p[0] for p in points]
    if x <= xs[0]:
        return points[0][1]
    if x >= xs[-1]:
        return points[-1][1]
    k = bisect.bisect_right(xs, x)
    (x0, y0), (x1, y1) = points[k - 1], points[k]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


# detection probability as a function of normalized box area
DEFAULT_RECALL_BY_SIZE = ((0.0005, 0.05), (0.003, 0.3), (0.02, 0.7), (0.08, 0.95))


@dataclass(frozen=True)
class PerceptionProviderConfig:
    kind: str = "oracle"  # oracle | noisy | external
    recall_by_size: tuple[tuple[float, float], ...] = DEFAULT_RECALL_BY_SIZE
    false_positive_rate: float = 0.0
    label_confusion: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    seed: int = 0
    endpoint: Optional[str] = None
    timeout: float = 10.0
    retries: int = 2

    def __post_init__(self):
        if self.kind not in ("oracle", "noisy", "external"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        pts = tuple(sorted((float(a), float(r)) for a, r in self.recall_by_size))
        if not pts:
            raise ValueError("recall_by_size needs at least one point")
        object.__setattr__(self, "recall_by_size", pts)
        probs = [r for _, r in pts] + [self.false_positive_rate]
        for row in self.label_confusion.values():
            probs.extend(row.values())
            if sum(row.values()) > 1.0 + 1e-9:
                raise ValueError("label confusion row sums past 1")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.kind == "external" and not self.endpoint:
            raise ValueError("external provider needs an endpoint")


class NoisyDetector:
    """Size-dependent misses, per-view false positives and label confusion.

    The random stream for a call is keyed by the view and request, so results
    do not depend on call order.
    """

    def __init__(self, config: PerceptionProviderConfig):
        self.config = config

    def recall(self, area: float) -> float:
        return piecewise_linear(self.config.recall_by_size, area)

    def _confuse(self, label: str, rng: random.Random) -> str:
        row = self.config.label_confusion.get(label)
        if not row:
            return label
        u, acc = rng.random(), 0.0
        for other in sorted(row):
            acc += row[other]
            if u < acc:
                return other
        return label

    def detect(self, view: SymbolicView, categories: Sequence[str]) -> list[ObjectProposal]:
        pose = view.pose
        rng = random.Random(stable_seed(self.config.seed, view.node_id, repr(pose.heading),
                                        repr(pose.pitch), repr(pose.fov), *sorted(categories)))
        out = []
        for e in sorted(view.entities, key=lambda e: e.entity_id):
            label = _requested_label(e, categories)
            if label is None:
                continue
            p = self.recall(e.bbox.area)
            if rng.random() < p:
                out.append(ObjectProposal(e.bbox, self._confuse(label, rng), round(p, 6),
                                          view.node_id, pose, e.entity_id))
        if categories and rng.random() < self.config.false_positive_rate:
            w, h = rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.3)
            bbox = BBox(rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2), w, h)
            out.append(ObjectProposal(bbox, rng.choice(sorted(categories)),
                                      round(rng.uniform(0.05, 0.6), 6), view.node_id, pose, None))
        return out


def proposal_key(p: ObjectProposal) -> str:
    return "|".join([str(p.entity_id), p.source_node, repr(p.source_pose.heading),
                     repr(p.source_pose.fov), *map(repr, p.bbox.as_list()), p.label])


class OracleMatcher:
    """Declares two proposals the same object iff they share a ground-truth entity."""

    def match(self, a: ObjectProposal, b: ObjectProposal) -> tuple[bool, float]:
        same = a.entity_id is not None and a.entity_id == b.entity_id
        return same, 1.0 if same else 0.0


class SimulatedMatcher:
    """Oracle verdict flipped at configured rates, seeded per proposal pair."""

    def __init__(self, false_match_rate: float = 0.0, miss_rate: float = 0.0, seed: int = 0):
        if not (0 <= false_match_rate <= 1 and 0 <= miss_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        self.false_match_rate = false_match_rate
        self.miss_rate = miss_rate
        self.seed = seed

    def match(self, a: ObjectProposal, b: ObjectProposal) -> tuple[bool, float]:
        same, _ = OracleMatcher().match(a, b)
        ka, kb = sorted((proposal_key(a), proposal_key(b)))
        u = random.Random(stable_seed(self.seed, ka, kb)).random()
        if same and u < self.miss_rate:
            return False, 0.0
        if not same and u < self.false_match_rate:
            return True, 1.0
        return same, 1.0 if same else 0.0


class StorefrontScorer:
    """Image scorer for symbolic photo refs of the form ``<place>/<kind>/<n>``.

    Storefront photos score high, everything else low.
    """

    def __init__(self, storefront: float = 0.9, other: float = 0.1):
        self.storefront = storefront
        self.other = other

    def score(self, image_ref: str) -> float:
        parts = image_ref.split("/")
        return self.storefront if len(parts) >= 2 and parts[1] == "storefront" else self.other


class MappingScorer:
    """Fixed scores per image ref; unknown refs score ``default``."""

    def __init__(self, scores: Mapping[str, float], default: float = 0.0):
        self.scores = dict(scores)
        self.default = default

    def score(self, image_ref: str) -> float:
        return self.scores.get(image_ref, self.default)


def build_detector(config: PerceptionProviderConfig, world=None) -> Detector:
    if config.kind == "oracle":
        return OracleDetector()
    if config.kind == "noisy":
        return NoisyDetector(config)
    from ..providers.http import HttpProvider

    return HttpProvider(config.endpoint, timeout=config.timeout, retries=config.retries, world=world)
