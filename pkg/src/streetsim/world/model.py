from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence

from ..errors import NoStreetView, UnknownNode, UnknownPlace
from ..geo import EARTH_RADIUS_M, GeoCoordinate, haversine_distance

DEFAULT_RELOCATE_RADIUS_M = 50.0


def freeze(value: Any) -> Any:
    """Recursively turn dicts into read-only mappings and lists into tuples."""
    if isinstance(value, Mapping):
        return MappingProxyType({k: freeze(v) for k, v in value.items()})
    if isinstance(value, (list, tuple)):
        return tuple(freeze(v) for v in value)
    return value


def thaw(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: thaw(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [thaw(v) for v in value]
    return value


@dataclass(frozen=True)
class Edge:
    node_id: str
    heading: float
    length: float


@dataclass(frozen=True)
class StreetNode:
    id: str
    coord: GeoCoordinate
    neighbors: tuple[Edge, ...] = ()
    web_visible_neighbors: frozenset[str] = frozenset()

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    def edge_to(self, node_id: str) -> Optional[Edge]:
        for e in self.neighbors:
            if e.node_id == node_id:
                return e
        return None


@dataclass(frozen=True)
class Review:
    text: str
    rating: float


@dataclass(frozen=True)
class Place:
    id: str
    name: str
    types: tuple[str, ...]
    coord: GeoCoordinate
    rating: Optional[float] = None
    reviews: tuple[Review, ...] = ()
    photo_refs: tuple[str, ...] = ()

    @property
    def primary_type(self) -> str:
        return self.types[0]


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    category: str
    coord: GeoCoordinate
    height_m: float
    width_m: float


class _GridIndex:
    """Bucket ids by a fixed lat/lng cell so radius queries touch few items."""

    CELL_DEG = 0.0005  # ~55 m of latitude

    def __init__(self, items: Iterable[tuple[str, GeoCoordinate]]):
        self._cells: dict[tuple[int, int], list[tuple[str, GeoCoordinate]]] = {}
        for item_id, c in items:
            self._cells.setdefault(self._key(c.lat, c.lng), []).append((item_id, c))

    def _key(self, lat: float, lng: float) -> tuple[int, int]:
        return math.floor(lat / self.CELL_DEG), math.floor(lng / self.CELL_DEG)

    def within(self, p: GeoCoordinate, radius: float) -> Iterator[tuple[str, GeoCoordinate, float]]:
        dlat = math.degrees(radius / EARTH_RADIUS_M)
        coslat = max(math.cos(math.radians(p.lat)), 1e-6)
        dlng = min(180.0, dlat / coslat)
        lo = self._key(p.lat - dlat, p.lng - dlng)
        hi = self._key(p.lat + dlat, p.lng + dlng)
        if (hi[1] - lo[1]) * (hi[0] - lo[0]) > len(self._cells):
            cells: Iterable = self._cells.values()
        else:
            cells = (self._cells.get((i, j), ()) for i in range(lo[0], hi[0] + 1)
                     for j in range(lo[1], hi[1] + 1))
        for bucket in cells:
            for item_id, c in bucket:
                d = haversine_distance(p, c)
                if d <= radius:
                    yield item_id, c, d


@dataclass(frozen=True, eq=False)
class World:
    """Street graph, place database and object instances. Read-only."""

    nodes: Mapping[str, StreetNode]
    places: Mapping[str, Place]
    instances: Mapping[str, ObjectInstance]
    vocabulary: tuple[str, ...]
    meta: Mapping[str, Any] = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("nodes", "places", "instances"):
            value = getattr(self, name)
            if not isinstance(value, MappingProxyType):
                object.__setattr__(self, name, MappingProxyType(dict(value)))
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        object.__setattr__(self, "meta", freeze(dict(self.meta)))

    # -- lazily built indexes; World data itself never changes
    def _index(self, kind: str) -> _GridIndex:
        key = ("index", kind)
        if key not in self._memo:
            source = getattr(self, kind)
            self._memo[key] = _GridIndex((k, v.coord) for k, v in source.items())
        return self._memo[key]

    def node(self, node_id: str) -> StreetNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def nodes_within(self, p: GeoCoordinate, radius: float) -> list[tuple[str, float]]:
        return sorted(((i, d) for i, _, d in self._index("nodes").within(p, radius)),
                      key=lambda t: (t[1], t[0]))

    def places_within(self, p: GeoCoordinate, radius: float) -> list[tuple[str, float]]:
        return sorted(((i, d) for i, _, d in self._index("places").within(p, radius)),
                      key=lambda t: (t[1], t[0]))

    def instances_within(self, p: GeoCoordinate, radius: float) -> list[tuple[str, float]]:
        return sorted(((i, d) for i, _, d in self._index("instances").within(p, radius)),
                      key=lambda t: (t[1], t[0]))

    @property
    def regions(self) -> list[tuple[str, Any]]:
        """Named region polygons recorded in metadata, in file order."""
        from ..geo import GeoPolygon

        out = []
        for r in self.meta.get("regions", ()):
            out.append((r["name"], GeoPolygon.from_pairs(r["vertices"])))
        return out

    def replace(self, **changes) -> "World":
        values = {"nodes": self.nodes, "places": self.places, "instances": self.instances,
                  "vocabulary": self.vocabulary, "meta": thaw(self.meta)}
        values.update(changes)
        return World(**values)


def relocate(w: World, p: GeoCoordinate, radius: float = DEFAULT_RELOCATE_RADIUS_M) -> StreetNode:
    """Snap ``p`` to the nearest street-view node within ``radius`` meters.

    Ties on distance go to the lexicographically smallest node id.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    hits = w.nodes_within(p, radius)
    if not hits:
        raise NoStreetView(f"no street-view node within {radius} m of ({p.lat}, {p.lng})")
    return w.nodes[hits[0][0]]


def nearby_places(w: World, p: GeoCoordinate, radius: float,
                  type_filter: Optional[Sequence[str]] = None) -> list[tuple[Place, float]]:
    if radius < 0:
        raise ValueError("radius must be non-negative")
    wanted = set(type_filter) if type_filter is not None else None
    out = []
    for pid, d in w.places_within(p, radius):
        place = w.places[pid]
        if wanted is None or wanted.intersection(place.types):
            out.append((place, d))
    return out


def place_details(w: World, place_id: str) -> Place:
    try:
        return w.places[place_id]
    except KeyError:
        raise UnknownPlace(f"unknown place {place_id!r}") from None
