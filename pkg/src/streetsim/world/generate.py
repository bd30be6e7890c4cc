"""Seeded synthetic city blocks.

Streets are laid on a jittered lattice: every ``block``-th row and column is a
street, sampled every ``spacing_m`` meters. A random spanning tree keeps the
graph connected while edges that touch intersections are pruned at random,
which yields T-junctions and dead ends. Places and object instances are then
scattered along edges with a minimum separation.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Mapping, Optional, Sequence

from ..canonical import round_sig
from ..errors import InfeasibleParams
from ..geo import (GeoCoordinate, GeoPolygon, LocalFrame, haversine_distance, initial_bearing,
                   point_in_polygon)
from .model import Edge, ObjectInstance, Place, Review, StreetNode, World
from .visibility import unoccluded


def default_vocabulary() -> tuple[str, ...]:
    text = resources.files("streetsim.data").joinpath("place_types.json").read_text("utf-8")
    return tuple(json.loads(text))


INSTANCE_EXTENTS = {
    # category: (height_m, width_m)
    "trash bin": (1.0, 0.6),
    "fire hydrant": (0.8, 0.4),
    "mailbox": (1.2, 0.5),
}

_ADJ = {
    "en": ["Golden", "Blue", "Little", "Old", "Happy", "Silver", "Green", "Royal", "Lucky", "Sunny",
           "Red", "Urban", "Corner", "Quiet", "Bright"],
    "es": ["Dorado", "Azul", "Viejo", "Feliz", "Verde", "Real", "Buen", "Gran"],
    "zh": ["金", "福", "华", "龙", "新", "东方", "美", "和"],
}
_NOUN = {
    "en": ["Lantern", "Oak", "Harbor", "Bridge", "Garden", "Anchor", "Maple", "Star", "River",
           "Crown", "Pine", "Fox"],
    "es": ["Sol", "Puerto", "Jardín", "Río", "Roble", "Faro", "Puente", "Estrella"],
    "zh": ["记", "园", "楼", "轩", "坊", "阁", "居", "苑"],
}
_REVIEW = {
    "en": {"base": ["Friendly staff.", "Would come back.", "A bit crowded at noon.", "Good value.",
                    "Clean and tidy."],
           "spice": "The food was really spicy.", "authentic": "Tastes authentic, like back home."},
    "es": {"base": ["Personal amable.", "Volvería.", "Buen precio.", "Muy limpio."],
           "spice": "La comida era muy picante.", "authentic": "Sabor auténtico."},
    "zh": {"base": ["服务很好。", "会再来。", "性价比高。", "很干净。"],
           "spice": "菜很辣。", "authentic": "味道很正宗。"},
}
FOOD_TYPES = frozenset({"restaurant", "cafe", "bakery", "meal_takeaway", "meal_delivery", "bar"})


@dataclass(frozen=True)
class WorldParams:
    node_count: int = 120
    area: Optional[GeoPolygon] = None
    center: GeoCoordinate = GeoCoordinate(40.758, -73.9855)
    spacing_m: float = 12.0
    block: int = 4
    place_density: float = 2.0       # expected places per 100 m of street
    instance_density: float = 0.6    # expected instances per 100 m of street
    web_visibility_fraction: float = 0.75
    language_mix: Mapping[str, float] = field(default_factory=lambda: {"en": 1.0})
    connected: bool = True
    edge_keep_prob: float = 0.8
    jitter: float = 0.08             # fraction of spacing
    region_grid: tuple[int, int] = (3, 3)
    instance_categories: tuple[str, ...] = tuple(INSTANCE_EXTENTS)
    place_types: Optional[tuple[str, ...]] = None   # subset of the vocabulary to draw from
    zero_review_fraction: float = 0.1
    observe_range_m: float = 30.0
    name: str = "synthetic"

    def check(self) -> None:
        if self.node_count < 1:
            raise InfeasibleParams("node_count must be >= 1")
        if self.place_density < 0 or self.instance_density < 0:
            raise InfeasibleParams("densities must be >= 0")
        if not 0.0 <= self.web_visibility_fraction <= 1.0:
            raise InfeasibleParams("web_visibility_fraction must be in [0, 1]")
        if not 0.0 <= self.edge_keep_prob <= 1.0:
            raise InfeasibleParams("edge_keep_prob must be in [0, 1]")
        if self.spacing_m <= 0 or self.block < 1:
            raise InfeasibleParams("spacing_m and block must be positive")
        if not 0.0 <= self.jitter < 0.5:
            raise InfeasibleParams("jitter must be in [0, 0.5)")
        if not self.language_mix or any(v < 0 for v in self.language_mix.values()) \
                or sum(self.language_mix.values()) <= 0:
            raise InfeasibleParams("language_mix needs non-negative weights with a positive sum")
        unknown = set(self.language_mix) - set(_ADJ)
        if unknown:
            raise InfeasibleParams(f"unsupported languages {sorted(unknown)}")
        bad = set(self.instance_categories) - set(INSTANCE_EXTENTS)
        if bad:
            raise InfeasibleParams(f"unknown instance categories {sorted(bad)}")
        if self.region_grid[0] < 1 or self.region_grid[1] < 1:
            raise InfeasibleParams("region_grid must be positive")

    def describe(self) -> dict:
        d = asdict(self)
        d["area"] = self.area.to_pairs() if self.area is not None else None
        d["center"] = [self.center.lat, self.center.lng]
        d["language_mix"] = dict(sorted(self.language_mix.items()))
        d["region_grid"] = list(self.region_grid)
        d["instance_categories"] = list(self.instance_categories)
        d["place_types"] = list(self.place_types) if self.place_types is not None else None
        return d


def _on_street(i: int, j: int, block: int) -> bool:
    return i % block == 0 or j % block == 0


def _lattice(rows: int, cols: int, block: int):
    for i in range(rows):
        for j in range(cols):
            if _on_street(i, j, block):
                yield i, j


def _layout(params: WorldParams, rng: random.Random):
    """Return (frame, area polygon, list of (i, j, x, y)) for exactly node_count nodes."""
    n, b = params.node_count, params.block
    if params.area is None:
        frac = (2 * b - 1) / (b * b) if b > 1 else 1.0
        side = max(1, math.ceil(math.sqrt(n / frac)))
        cols = (math.ceil((side - 1) / b) * b + 1) if b > 1 else side
        rows = 1
        while sum(1 for _ in _lattice(rows, cols, b)) < n:
            rows += 1
        spacing = params.spacing_m
        cells = list(_lattice(rows, cols, b))[:n]
        frame = LocalFrame(params.center)
        ox = -(cols - 1) * spacing / 2
        oy = -(rows - 1) * spacing / 2
        pts = [(i, j, ox + j * spacing, oy + i * spacing) for i, j in cells]
        margin = spacing * max(b, 2) / 2 + 10.0
        xs = [p[2] for p in pts]
        ys = [p[3] for p in pts]
        corners = [(min(ys) - margin, min(xs) - margin), (min(ys) - margin, max(xs) + margin),
                   (max(ys) + margin, max(xs) + margin), (max(ys) + margin, min(xs) - margin)]
        area = GeoPolygon(tuple(frame.to_coord(x, y) for y, x in corners))
        return frame, area, pts, spacing

    area = params.area
    south, west, north, east = area.bounds()
    frame = LocalFrame(GeoCoordinate(south, west))
    x1, y1 = frame.to_xy(GeoCoordinate(north, east))
    spacing = math.sqrt(max(x1 * y1, 1.0) / n)
    for _ in range(200):
        cols = max(1, int(x1 // spacing) + 1)
        rows = max(1, int(y1 // spacing) + 1)
        inside = []
        for i, j in _lattice(rows, cols, b):
            x, y = spacing / 2 + j * spacing, spacing / 2 + i * spacing
            if x > x1 or y > y1:
                continue
            if point_in_polygon(frame.to_coord(x, y), area):
                inside.append((i, j, x, y))
        if len(inside) >= n:
            return frame, area, inside[:n], spacing
        spacing *= 0.9
    raise InfeasibleParams("could not fit node_count nodes inside the area")


class _DisjointSet:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _pick_language(params: WorldParams, rng: random.Random) -> str:
    langs = sorted(params.language_mix)
    return rng.choices(langs, weights=[params.language_mix[k] for k in langs])[0]


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth; lam is small per edge
    limit, k, p = math.exp(-lam), 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def generate_world(seed: int, params: Optional[WorldParams] = None) -> World:
    params = params or WorldParams()
    params.check()
    vocabulary = default_vocabulary()
    type_pool = params.place_types or vocabulary
    if not set(type_pool) <= set(vocabulary):
        raise InfeasibleParams("place_types must come from the vocabulary")
    rng = random.Random(seed)
    frame, area, pts, spacing = _layout(params, rng)
    n = len(pts)
    width = max(4, len(str(n - 1)))
    ids = [f"n{k:0{width}d}" for k in range(n)]
    index_of = {(i, j): k for k, (i, j, _, _) in enumerate(pts)}

    coords = []
    for i, j, x, y in pts:
        jx = rng.uniform(-params.jitter, params.jitter) * spacing
        jy = rng.uniform(-params.jitter, params.jitter) * spacing
        c = frame.to_coord(x + jx, y + jy)
        if not point_in_polygon(c, area):
            c = frame.to_coord(x, y)
        coords.append(GeoCoordinate(round_sig(c.lat), round_sig(c.lng)))

    # lattice adjacency
    edges = set()
    for (i, j), k in index_of.items():
        for di, dj in ((1, 0), (0, 1)):
            other = index_of.get((i + di, j + dj))
            if other is not None:
                edges.add((k, other))
    is_intersection = [i % params.block == 0 and j % params.block == 0 for i, j, _, _ in pts]
    order = sorted(edges)
    rng.shuffle(order)
    dsu = _DisjointSet(range(n))
    tree = {e for e in order if dsu.union(*e)} if params.connected else set()
    kept = set()
    for e in sorted(edges):
        prunable = is_intersection[e[0]] or is_intersection[e[1]]
        if e in tree or not prunable or rng.random() < params.edge_keep_prob:
            kept.add(e)
    if params.connected:
        # polygons with holes or notches can leave lattice components apart
        comp = _DisjointSet(range(n))
        for a, c in kept:
            comp.union(a, c)
        roots = sorted({comp.find(k) for k in range(n)})
        while len(roots) > 1:
            base = [k for k in range(n) if comp.find(k) == roots[0]]
            rest = [k for k in range(n) if comp.find(k) != roots[0]]
            a, c = min(((a, c) for a in base for c in rest),
                       key=lambda t: (haversine_distance(coords[t[0]], coords[t[1]]), t))
            kept.add((min(a, c), max(a, c)))
            comp.union(a, c)
            roots = sorted({comp.find(k) for k in range(n)})

    adjacency: dict[int, list[int]] = {k: [] for k in range(n)}
    for a, c in sorted(kept):
        adjacency[a].append(c)
        adjacency[c].append(a)
    nodes = {}
    for k in range(n):
        nb = sorted(adjacency[k], key=lambda o: ids[o])
        es = tuple(Edge(ids[o], round_sig(initial_bearing(coords[k], coords[o])),
                        round_sig(haversine_distance(coords[k], coords[o]))) for o in nb)
        visible = frozenset(ids[o] for o in nb if rng.random() < params.web_visibility_fraction)
        nodes[ids[k]] = StreetNode(ids[k], coords[k], es, visible)

    # scatter places and instances along streets
    xy = [frame.to_xy(c) for c in coords]
    node_pts = list(zip(coords, xy))

    def clearance_ok(px, py, placed, min_sep, node_clear):
        for qx, qy in placed:
            if (px - qx) ** 2 + (py - qy) ** 2 < min_sep ** 2:
                return False
        for _, (nx, ny) in node_pts:
            if (px - nx) ** 2 + (py - ny) ** 2 < node_clear ** 2:
                return False
        return True

    def scatter(density, lateral, min_sep, node_clear):
        placed_xy, out = [], []
        for a, c in sorted(kept):
            (ax, ay), (cx, cy) = xy[a], xy[c]
            length = math.hypot(cx - ax, cy - ay)
            if length == 0:
                continue
            ux, uy = (cx - ax) / length, (cy - ay) / length
            for _ in range(_poisson(rng, density * length / 100.0)):
                t = rng.random()
                side = rng.choice((-1.0, 1.0))
                off = rng.uniform(*lateral)
                px = ax + ux * length * t - uy * off * side
                py = ay + uy * length * t + ux * off * side
                coord = frame.to_coord(px, py)
                if not point_in_polygon(coord, area):
                    continue
                if not clearance_ok(px, py, placed_xy, min_sep, node_clear):
                    continue
                placed_xy.append((px, py))
                out.append(GeoCoordinate(round_sig(coord.lat), round_sig(coord.lng)))
        return out

    place_coords = scatter(params.place_density, (6.0, 9.0), 5.0, 5.5)
    inst_coords = scatter(params.instance_density, (2.0, 4.0), 4.0, 1.5)

    # keep only entities some node can actually see
    entities = [(f"p{k}", c) for k, c in enumerate(place_coords)] + \
               [(f"i{k}", c) for k, c in enumerate(inst_coords)]
    seen: set[str] = set()
    if entities:
        from .model import _GridIndex
        index = _GridIndex(entities)
        for c in coords:
            near = [(eid, ec) for eid, ec, _ in index.within(c, params.observe_range_m)]
            seen.update(unoccluded(c, near, params.observe_range_m))
    place_coords = [c for k, c in enumerate(place_coords) if f"p{k}" in seen]
    inst_coords = [c for k, c in enumerate(inst_coords) if f"i{k}" in seen]

    pw = max(4, len(str(max(len(place_coords) - 1, 0))))
    places = {}
    used_names: set[str] = set()
    for k, c in enumerate(place_coords):
        pid = f"p{k:0{pw}d}"
        places[pid] = _make_place(pid, c, type_pool, params, rng, used_names)

    iw = max(4, len(str(max(len(inst_coords) - 1, 0))))
    instances = {}
    for k, c in enumerate(inst_coords):
        cat = rng.choice(params.instance_categories)
        h, wdt = INSTANCE_EXTENTS[cat]
        oid = f"i{k:0{iw}d}"
        instances[oid] = ObjectInstance(oid, cat, c, h, wdt)

    meta = {
        "name": params.name,
        "seed": seed,
        "bounds": [[round_sig(v.lat), round_sig(v.lng)] for v in area.vertices],
        "generator": params.describe(),
        "regions": _regions(area, params.region_grid),
    }
    return World(nodes, places, instances, vocabulary, meta)


def _regions(area: GeoPolygon, grid: tuple[int, int]) -> list[dict]:
    south, west, north, east = area.bounds()
    rows, cols = grid
    out = []
    for r in range(rows):
        for c in range(cols):
            s = south + (north - south) * r / rows
            nn = south + (north - south) * (r + 1) / rows
            w = west + (east - west) * c / cols
            e = west + (east - west) * (c + 1) / cols
            verts = [[round_sig(s), round_sig(w)], [round_sig(s), round_sig(e)],
                     [round_sig(nn), round_sig(e)], [round_sig(nn), round_sig(w)]]
            out.append({"name": f"R{r}{c}", "vertices": verts})
    return out


def _type_label(t: str) -> str:
    return t.replace("_", " ").title()


def _make_place(pid: str, coord: GeoCoordinate, type_pool: Sequence[str], params: WorldParams,
                rng: random.Random, used_names: set[str]) -> Place:
    primary = rng.choice(type_pool)
    types = [primary]
    if rng.random() < 0.3:
        extra = rng.choice(type_pool)
        if extra != primary:
            types.append(extra)
    lang = _pick_language(params, rng)
    sep = "" if lang == "zh" else " "
    base = sep.join([rng.choice(_ADJ[lang]), rng.choice(_NOUN[lang]), _type_label(primary)])
    name, k = base, 2
    while name in used_names:
        name, k = f"{base} {k}", k + 1
    used_names.add(name)

    reviews = []
    if rng.random() >= params.zero_review_fraction:
        tmpl = _REVIEW[_pick_language(params, rng)]
        food = primary in FOOD_TYPES
        for _ in range(rng.randint(1, 5)):
            parts = [rng.choice(tmpl["base"])]
            if food and rng.random() < 0.4:
                parts.append(tmpl["spice"])
            if food and rng.random() < 0.4:
                parts.append(tmpl["authentic"])
            reviews.append(Review(" ".join(parts), float(rng.randint(1, 5))))
    rating = round_sig(round(sum(r.rating for r in reviews) / len(reviews), 1)) if reviews else None
    photos = []
    if rng.random() < 0.9:
        photos.append(f"{pid}/storefront/0")
    if rng.random() < 0.35:
        photos.append(f"{pid}/interior/{len(photos)}")
    if rng.random() < 0.2:
        photos.append(f"{pid}/menu/{len(photos)}")
    return Place(pid, name, tuple(types), coord, rating, tuple(reviews), tuple(photos))
