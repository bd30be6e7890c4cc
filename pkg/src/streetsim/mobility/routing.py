"""Shortest paths, routes with key positions, travel time and waypoint ordering."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from ..canonical import check_document
from ..errors import Unreachable, UnknownMode
from ..geo import angular_offset
from ..world import World

MODE_SPEEDS_MPS = {"walk": 1.4, "bicycle": 4.2, "drive": 8.3}
EXACT_WAYPOINT_LIMIT = 8
TURN_THRESHOLD_DEG = 45.0
_EPS = 1e-9


def shortest_distances(w: World, source: str) -> tuple[dict[str, float], dict[str, str]]:
    """Dijkstra over the full street graph; memoized per world."""
    key = ("sssp", source)
    hit = w._memo.get(key)
    if hit is not None:
        return hit
    w.node(source)
    dist = {source: 0.0}
    prev: dict[str, str] = {}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for e in w.nodes[u].neighbors:
            nd = d + e.length
            v = e.node_id
            if nd < dist.get(v, float("inf")) - _EPS or (
                    abs(nd - dist.get(v, float("inf"))) <= _EPS and v not in done and u < prev.get(v, u)):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    w._memo[key] = (dist, prev)
    return dist, prev


def path_distance(w: World, a: str, b: str) -> float:
    dist, _ = shortest_distances(w, a)
    if b not in dist:
        raise Unreachable(f"{b} is not reachable from {a}")
    return dist[b]


def shortest_path(w: World, a: str, b: str) -> list[str]:
    dist, prev = shortest_distances(w, a)
    if b not in dist:
        raise Unreachable(f"{b} is not reachable from {a}")
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def turn_action(in_heading: float, out_heading: float) -> str:
    off = angular_offset(in_heading, out_heading)
    if abs(off) <= TURN_THRESHOLD_DEG:
        return "forward"
    return "turn_left" if off < 0 else "turn_right"


@dataclass(frozen=True)
class KeyPosition:
    node_id: str
    kind: str  # start | intersection | stop
    index: int  # position along the full node path


@dataclass(frozen=True)
class Route:
    key_positions: tuple[KeyPosition, ...]
    legs: tuple[tuple[str, ...], ...]
    total_length: float
    transport_mode: str = "walk"
    start_heading: Optional[float] = None
    route_id: str = ""
    region: str = ""

    @property
    def path(self) -> list[str]:
        if not self.legs:
            return [self.key_positions[0].node_id]
        out = list(self.legs[0])
        for leg in self.legs[1:]:
            out.extend(leg[1:])
        return out

    @property
    def start(self) -> str:
        return self.key_positions[0].node_id

    @property
    def stop(self) -> str:
        return self.key_positions[-1].node_id

    def with_meta(self, **changes) -> "Route":
        return replace(self, **changes)

    def to_document(self) -> dict:
        return {
            "route_id": self.route_id, "region": self.region,
            "transport_mode": self.transport_mode, "start_heading": self.start_heading,
            "total_length": self.total_length,
            "key_positions": [{"node_id": k.node_id, "kind": k.kind, "index": k.index}
                              for k in self.key_positions],
            "legs": [list(leg) for leg in self.legs],
        }

    @classmethod
    def from_document(cls, doc: Mapping) -> "Route":
        check_document(doc, "route.schema.json")
        return cls(tuple(KeyPosition(k["node_id"], k["kind"], k["index"]) for k in doc["key_positions"]),
                   tuple(tuple(leg) for leg in doc["legs"]), float(doc["total_length"]),
                   doc["transport_mode"], doc["start_heading"], doc["route_id"], doc["region"])


def _edge_heading(w: World, a: str, b: str) -> float:
    return w.nodes[a].edge_to(b).heading


def route_from_path(w: World, path: Sequence[str], transport_mode: str = "walk",
                    stops: Iterable[int] = ()) -> Route:
    """Annotate a node path with key positions.

    Interior nodes of degree >= 3 where the path turns become intersections;
    indices listed in ``stops`` become intermediate stops.
    """
    if transport_mode not in MODE_SPEEDS_MPS:
        raise UnknownMode(f"unknown transport mode {transport_mode!r}")
    path = list(path)
    if len(path) == 1:
        kp = (KeyPosition(path[0], "start", 0), KeyPosition(path[0], "stop", 0))
        return Route(kp, (), 0.0, transport_mode)
    stops = set(stops)
    keys = [KeyPosition(path[0], "start", 0)]
    for i in range(1, len(path) - 1):
        if i in stops:
            keys.append(KeyPosition(path[i], "stop", i))
        elif w.nodes[path[i]].degree >= 3:
            action = turn_action(_edge_heading(w, path[i - 1], path[i]),
                                 _edge_heading(w, path[i], path[i + 1]))
            if action != "forward":
                keys.append(KeyPosition(path[i], "intersection", i))
    keys.append(KeyPosition(path[-1], "stop", len(path) - 1))
    legs = tuple(tuple(path[a.index:b.index + 1]) for a, b in zip(keys, keys[1:]))
    total = 0.0
    for a, b in zip(path, path[1:]):
        edge = w.nodes[a].edge_to(b)
        if edge is None:
            raise Unreachable(f"path jumps from {a} to non-neighbor {b}")
        total += edge.length
    return Route(tuple(keys), legs, total, transport_mode, _edge_heading(w, path[0], path[1]))


def plan_route(w: World, start: str, goal: str, transport_mode: str = "walk") -> Route:
    w.node(start), w.node(goal)
    return route_from_path(w, shortest_path(w, start, goal), transport_mode)


def estimate_travel_time(route: Route, transport_mode: Optional[str] = None,
                         speeds: Mapping[str, float] = MODE_SPEEDS_MPS) -> float:
    mode = transport_mode or route.transport_mode
    if mode not in speeds:
        raise UnknownMode(f"unknown transport mode {mode!r}")
    return route.total_length / speeds[mode]


# -- ordering heuristics over a symmetric distance function

def sequence_cost(seq: Sequence[str], dist) -> float:
    return sum(dist(a, b) for a, b in zip(seq, seq[1:]))


def nearest_neighbor_order(first: str, rest: Sequence[str], dist) -> list[str]:
    order, left = [first], list(rest)
    while left:
        cur = order[-1]
        nxt = min(range(len(left)), key=lambda k: (dist(cur, left[k]), left[k], k))
        order.append(left.pop(nxt))
    return order


def two_opt(seq: Sequence[str], dist, fixed_start: bool = True) -> list[str]:
    """Reverse segments of an open path until no reversal shortens it.

    With ``fixed_start`` False the first element may move too, which is the
    open-path equivalent of running 2-opt on a tour through a dummy node.
    """
    s = list(seq)
    n = len(s)
    improved = True
    while improved:
        improved = False
        for i in range(1 if fixed_start else 0, n - 1):
            for k in range(i + 1, n):
                before = (dist(s[i - 1], s[i]) if i > 0 else 0.0) + \
                         (dist(s[k], s[k + 1]) if k + 1 < n else 0.0)
                after = (dist(s[i - 1], s[k]) if i > 0 else 0.0) + \
                        (dist(s[i], s[k + 1]) if k + 1 < n else 0.0)
                if after < before - 1e-7:
                    s[i:k + 1] = reversed(s[i:k + 1])
                    improved = True
    return s


def _distance_fn(w: World):
    def dist(a: str, b: str) -> float:
        return path_distance(w, a, b)
    return dist


def optimize_waypoint_order(w: World, start: str, waypoints: Sequence[str],
                            transport_mode: str = "walk") -> tuple[list[str], Route]:
    """Order waypoints to minimize the walked length from ``start`` (open path).

    Exact over all permutations up to EXACT_WAYPOINT_LIMIT waypoints; beyond
    that the better of nearest-neighbor+2-opt and given-order+2-opt.
    """
    w.node(start)
    for p in waypoints:
        path_distance(w, start, p)
    dist = _distance_fn(w)
    waypoints = list(waypoints)
    if not waypoints:
        return [], plan_route(w, start, start, transport_mode)
    if len(waypoints) <= EXACT_WAYPOINT_LIMIT:
        best, best_cost = None, float("inf")
        for perm in itertools.permutations(waypoints):
            cost = dist(start, perm[0]) + sequence_cost(perm, dist)
            if cost < best_cost - 1e-7:
                best, best_cost = list(perm), cost
        ordering = best
    else:
        candidates = [two_opt(nearest_neighbor_order(start, waypoints, dist), dist)[1:],
                      two_opt([start] + waypoints, dist)[1:]]
        ordering = min(candidates, key=lambda o: dist(start, o[0]) + sequence_cost(o, dist))
    return ordering, route_through(w, [start] + ordering, transport_mode)


def route_through(w: World, stops: Sequence[str], transport_mode: str = "walk") -> Route:
    """Concatenate shortest legs through ``stops``; intermediate stops become key positions."""
    path = [stops[0]]
    stop_idx = []
    for a, b in zip(stops, stops[1:]):
        path.extend(shortest_path(w, a, b)[1:])
        stop_idx.append(len(path) - 1)
    return route_from_path(w, path, transport_mode, stops=stop_idx[:-1])
