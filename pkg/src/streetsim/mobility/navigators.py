"""Point, region and intention navigators built on the mover."""
from __future__ import annotations

import re
from typing import Any, Mapping, Sequence

from ..errors import EmptyRegion, IndexOutOfRange, ProviderError, Stuck, UnparseableAnswer
from ..geo import GeoPolygon, Pose, point_in_polygon
from ..perception.camera import render_view
from ..world import World
from .movers import AgentState, TrajectoryEntry, navigable_directions
from .routing import Route, nearest_neighbor_order, path_distance, sequence_cost, shortest_distances, two_opt

_EPS = 1e-9


def _candidates(w: World, node_id: str, target: str, mode: str):
    dist_to_target, _ = shortest_distances(w, target)  # symmetric graph
    here = dist_to_target.get(node_id)
    if here is None:
        return []
    out = []
    for h, nb in navigable_directions(w, node_id, mode):
        rest = dist_to_target.get(nb)
        if rest is not None and rest < here - _EPS:
            length = w.nodes[node_id].edge_to(nb).length
            out.append((round(length + rest, 6), h, nb))
    return out


def point_step(w: World, s: AgentState, target: str, mode: str = "grid") -> AgentState:
    """One greedy move toward ``target``.

    Only directions that strictly shrink the shortest-path distance count; the
    cheapest (edge + remaining) wins, smaller heading on ties. ``hybrid`` tries
    the web mover first and falls back to the grid mover at this node only.
    """
    if mode == "hybrid":
        cands = _candidates(w, s.node_id, target, "web") or _candidates(w, s.node_id, target, "grid")
    else:
        cands = _candidates(w, s.node_id, target, mode)
    if not cands:
        raise Stuck(s.node_id, f"no {mode} direction at {s.node_id} gets closer to {target}")
    _, h, nb = min(cands)
    return s.moved_to(nb, s.pose.replace(heading=h))


def point_navigate(w: World, s: AgentState, route: Route, mode: str = "grid") -> tuple[TrajectoryEntry, ...]:
    """Walk greedily through the route's key positions; returns the full trajectory."""
    if s.node_id != route.start:
        raise ValueError(f"agent is at {s.node_id}, route starts at {route.start}")
    for kp in route.key_positions[1:]:
        while s.node_id != kp.node_id:
            s = point_step(w, s, kp.node_id, mode)
    return s.trajectory


def nodes_in_region(w: World, region: GeoPolygon) -> list[str]:
    return sorted(nid for nid, n in w.nodes.items() if point_in_polygon(n.coord, region))


def plan_cost(w: World, plan: Sequence[str]) -> float:
    return sequence_cost(plan, lambda a, b: path_distance(w, a, b))


def region_navigate_plan(w: World, region: GeoPolygon) -> list[str]:
    """Open sweep through every node inside ``region``.

    Nearest-neighbor from the smallest node id, then 2-opt with a free start
    over shortest-path distances.
    """
    inside = nodes_in_region(w, region)
    if not inside:
        raise EmptyRegion("region contains no street nodes")

    def dist(a: str, b: str) -> float:
        return path_distance(w, a, b)

    order = nearest_neighbor_order(inside[0], inside[1:], dist)
    return two_opt(order, dist, fixed_start=False)


# -- intention navigator

def caption_view(view) -> str:
    """Symbolic stand-in for an image caption: scene tags plus what is in sight."""
    parts = list(view.tags)
    cats = sorted({e.category for e in view.entities})
    if cats:
        parts.append("visible: " + ", ".join(cats))
    return "; ".join(parts) if parts else "empty street"


INTENTION_KEYWORDS = {
    "lunch": ("restaurant", "cafe", "food", "bakery", "meal", "diner"),
    "dinner": ("restaurant", "food", "bar", "meal"),
    "coffee": ("cafe", "coffee", "bakery"),
    "shopping": ("store", "shop", "mall", "market", "clothing"),
    "drink": ("bar", "pub", "cafe", "night_club"),
    "park": ("park", "tree", "green", "garden"),
}


class KeywordReasoner:
    """Deterministic mock reasoner: scores captions by keyword hits for the intention.

    Words of the intention itself count as keywords too, so unknown intentions
    still work. Ties go to the lowest index.
    """

    def __init__(self, keywords: Mapping[str, Sequence[str]] = INTENTION_KEYWORDS):
        self.keywords = {k: tuple(v) for k, v in keywords.items()}

    def _terms(self, intention: str) -> list[str]:
        words = re.findall(r"[a-z_]+", intention.lower())
        terms = list(words)
        for wd in words:
            terms.extend(self.keywords.get(wd, ()))
        return terms

    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        terms = self._terms(str(context.get("intention", "")))
        scores = [sum(opt.lower().count(t) for t in terms) for opt in options]
        best = max(range(len(options)), key=lambda i: (scores[i], -i))
        return best, f"road {best} matches {scores[best]} intention keywords"


def parse_index(answer: Any, n: int) -> int:
    """Validate a provider's option index (ints or digit strings)."""
    if isinstance(answer, bool):
        raise UnparseableAnswer(f"answer {answer!r} is not an option index")
    if isinstance(answer, str) and answer.strip().lstrip("-").isdigit():
        answer = int(answer.strip())
    if isinstance(answer, float) and answer.is_integer():
        answer = int(answer)
    if not isinstance(answer, int):
        raise UnparseableAnswer(f"answer {answer!r} is not an option index")
    if not 0 <= answer < n:
        raise IndexOutOfRange(f"answer {answer} outside 0..{n - 1}")
    return answer


def intention_navigate_choose(road_views: Sequence, reasoner, intention: str,
                              captioner=caption_view) -> tuple[int, str]:
    """Caption each candidate road, then ask the reasoner which one serves the intention."""
    if len(road_views) < 2:
        raise ValueError("need at least two roads to choose from")
    captions = [captioner(v) for v in road_views]
    reply = reasoner.choose(captions, {"intention": intention})
    try:
        answer, rationale = reply
    except (TypeError, ValueError):
        raise ProviderError(f"reasoner returned {reply!r}, expected (index, rationale)") from None
    return parse_index(answer, len(road_views)), str(rationale)


def navigate_by_intention(w: World, s: AgentState, reasoner, intention: str, max_moves: int,
                          mode: str = "grid", render=None) -> AgentState:
    """Repeatedly pick a road at each node and walk it for ``max_moves`` moves.

    Dead ends with a single road are followed without consulting the reasoner.
    """
    render = render or render_view
    for _ in range(max_moves):
        dirs = navigable_directions(w, s.node_id, mode)
        if not dirs:
            break
        if len(dirs) == 1:
            h, nb = dirs[0]
        else:
            views = [render(w, s.node_id, Pose(heading=h, fov=60.0)) for h, _ in dirs]
            idx, _ = intention_navigate_choose(views, reasoner, intention)
            h, nb = dirs[idx]
        s = s.moved_to(nb, s.pose.replace(heading=h))
    return s
