"""Hand-built worlds laid out in local east/north meters."""
from __future__ import annotations

from streetsim.geo import GeoCoordinate, LocalFrame, Pose, angular_offset, haversine_distance, initial_bearing
from streetsim.perception.camera import BBox
from streetsim.perception.providers import ObjectProposal
from streetsim.world import ObjectInstance, Place, Review, World, default_vocabulary
from streetsim.world.model import Edge, StreetNode

ORIGIN = GeoCoordinate(40.0, -74.0)
FRAME = LocalFrame(ORIGIN)


def at(x, y):
    return FRAME.to_coord(x, y)


def make_world(nodes, edges, places=(), instances=(), web_hidden=(), meta=None, vocabulary=None):
    """nodes: {id: (x, y)}; edges: [(a, b)]; places: [(id, name, types, (x, y), n_reviews, photos)];
    instances: [(id, category, (x, y), h, w)]; web_hidden: edges the web mover cannot see."""
    coords = {nid: at(*xy) for nid, xy in nodes.items()}
    adj = {nid: [] for nid in nodes}
    for a, b in edges:
        for u, v in ((a, b), (b, a)):
            adj[u].append(Edge(v, initial_bearing(coords[u], coords[v]),
                               haversine_distance(coords[u], coords[v])))
    hidden = {frozenset(e) for e in web_hidden}
    street = {}
    for nid, es in adj.items():
        web = frozenset(e.node_id for e in es if frozenset((nid, e.node_id)) not in hidden)
        street[nid] = StreetNode(nid, coords[nid], tuple(sorted(es, key=lambda e: e.node_id)), web)
    pl = {}
    for pid, name, types, xy, n_reviews, photos in places:
        reviews = tuple(Review(f"review {k}", 4.0) for k in range(n_reviews))
        pl[pid] = Place(pid, name, tuple(types), at(*xy), 4.0 if n_reviews else None, reviews,
                        tuple(photos))
    inst = {oid: ObjectInstance(oid, cat, at(*xy), h, w) for oid, cat, xy, h, w in instances}
    return World(street, pl, inst, vocabulary or default_vocabulary(), meta or {})


def place(pid, types, xy, name=None, reviews=1, photos=None):
    types = [types] if isinstance(types, str) else list(types)
    photos = [f"{pid}/storefront/0"] if photos is None else photos
    return (pid, name or pid.upper(), types, xy, reviews, photos)


def line_world(n=5, spacing=20.0, **kw):
    """n nodes due east of each other: a0 - a1 - ... ."""
    nodes = {f"a{k}": (k * spacing, 0.0) for k in range(n)}
    edges = [(f"a{k}", f"a{k + 1}") for k in range(n - 1)]
    return make_world(nodes, edges, **kw)


def grid_world(rows=3, cols=3, spacing=30.0, **kw):
    """Full lattice with ids gRC, row 0 at the south."""
    nodes = {f"g{r}{c}": (c * spacing, r * spacing) for r in range(rows) for c in range(cols)}
    edges = [(f"g{r}{c}", f"g{r}{c + 1}") for r in range(rows) for c in range(cols - 1)]
    edges += [(f"g{r}{c}", f"g{r + 1}{c}") for r in range(rows - 1) for c in range(cols)]
    return make_world(nodes, edges, **kw)


# -- oracles shared by unit and acceptance tests


def to_nx(w):
    import networkx as nx

    g = nx.Graph()
    for nid, n in w.nodes.items():
        for e in n.neighbors:
            g.add_edge(nid, e.node_id, weight=e.length)
    return g


def brute_match(w, p, radius):
    """Scan every place; keep those whose bearing lies inside the box's angular span."""
    origin = w.nodes[p.source_node].coord
    fov = p.source_pose.fov
    left = max(-fov / 2, (p.bbox.cx - p.bbox.w / 2 - 0.5) * fov)
    right = min(fov / 2, (p.bbox.cx + p.bbox.w / 2 - 0.5) * fov)
    hits = []
    for pid, pl in w.places.items():
        d = haversine_distance(origin, pl.coord)
        if d > radius or d < 0.5:
            continue
        off = angular_offset(p.source_pose.heading, initial_bearing(origin, pl.coord))
        if left - 1e-9 <= off <= right + 1e-9:
            hits.append((d, pid))
    return {min(hits)[1]} if hits else set()


def random_scene(rng):
    n_places = rng.randint(0, 6)
    places = []
    for k in range(n_places):
        places.append(place(f"p{k}", "cafe", (rng.uniform(-32, 32), rng.uniform(-32, 32))))
    w = make_world({"o": (0, 0), "e": (15, 0)}, [("o", "e")], places=places)
    fov = rng.uniform(20, 120)
    bw = rng.uniform(0.02, 0.6)
    bbox = BBox(rng.uniform(bw / 2, 1 - bw / 2), 0.5, bw, 0.2)
    return w, ObjectProposal(bbox, "cafe", 0.9, "o", Pose(rng.uniform(0, 360), fov=fov))


# one violator per cleaning rule, plus a clean place
def cleaning_world():
    return make_world(
        {"o": (0, 0), "e": (30, 0)}, [("o", "e")],
        places=[place("ok", "cafe", (10, 10), photos=["ok/storefront/0", "ok/menu/0"]),
                place("far", "bank", (15, 500)),
                place("silent", "bar", (20, -8), reviews=0),
                place("blurry", "bakery", (5, -5), photos=["blurry/storefront/0", "blurry/storefront/1"])])


SCORES = {"ok/storefront/0": 0.9, "ok/menu/0": 0.8, "blurry/storefront/0": 0.7, "blurry/storefront/1": 0.2,
          "far/storefront/0": 0.9, "silent/storefront/0": 0.9}
