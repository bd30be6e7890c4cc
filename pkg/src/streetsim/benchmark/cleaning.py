"""Place cleaning: drop places that are hard to see, unreviewed, or badly photographed."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..errors import ProviderError
from ..geo import haversine_distance
from ..perception.providers import ImageScorer, StorefrontScorer
from ..world import Place, World

RULES = ("distance", "reviews", "image")


@dataclass(frozen=True)
class CleaningConfig:
    distance_threshold_m: float = 100.0
    min_reviews: int = 1
    image_score_threshold: float = 0.5
    scorer: ImageScorer = field(default_factory=StorefrontScorer)

    def __post_init__(self):
        if self.distance_threshold_m < 0 or self.min_reviews < 0 or self.image_score_threshold < 0:
            raise ValueError("cleaning thresholds must be non-negative")


@dataclass(frozen=True)
class CleaningEntry:
    place_id: str
    rule: str  # distance | reviews | image
    detail: str
    photo_ref: Optional[str] = None  # set for image drops; the place itself stays

    @property
    def removes_place(self) -> bool:
        return self.rule != "image"


def _nearest_node_distance(w: World, place: Place, threshold: float) -> Optional[float]:
    """Distance to the closest node if within ``threshold``, else None."""
    hits = w.nodes_within(place.coord, threshold)
    return hits[0][1] if hits else None


def _score(scorer: ImageScorer, ref: str) -> float:
    value = scorer.score(ref)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProviderError(f"image scorer returned {value!r} for {ref}")
    return float(value)


def clean_places(w: World, cfg: CleaningConfig) -> tuple[dict[str, Place], list[CleaningEntry]]:
    """Apply the distance, review and image rules in that order.

    Returns the kept places (photo refs filtered) and a log with one entry per
    removed place plus one per dropped photo.
    """
    kept: dict[str, Place] = {}
    log: list[CleaningEntry] = []
    for pid in sorted(w.places):
        place = w.places[pid]
        if _nearest_node_distance(w, place, cfg.distance_threshold_m) is None:
            nearest = min(haversine_distance(place.coord, n.coord) for n in w.nodes.values()) \
                if w.nodes else float("inf")
            log.append(CleaningEntry(pid, "distance",
                                     f"nearest street node {nearest:.1f} m > {cfg.distance_threshold_m} m"))
            continue
        if len(place.reviews) < cfg.min_reviews:
            log.append(CleaningEntry(pid, "reviews", f"{len(place.reviews)} reviews < {cfg.min_reviews}"))
            continue
        photos = []
        for ref in place.photo_refs:
            sc = _score(cfg.scorer, ref)
            if sc < cfg.image_score_threshold:
                log.append(CleaningEntry(pid, "image", f"score {sc:.3f} < {cfg.image_score_threshold}", ref))
            else:
                photos.append(ref)
        kept[pid] = replace(place, photo_refs=tuple(photos))
    return kept, log


def removed_ids(log: list[CleaningEntry]) -> set[str]:
    return {e.place_id for e in log if e.removes_place}


def cleaned_world(w: World, kept: dict[str, Place]) -> World:
    return w.replace(places=dict(kept))
