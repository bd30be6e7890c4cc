"""Seeded construction of a benchmark suite from a world.

A suite holds VLN routes with instructions, VQA items built from place
ground truth, and the detection areas. It is a pure function of
(world, seed, params).
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..canonical import digest, dumps, stable_seed
from ..errors import InfeasibleParams
from ..geo import GeoPolygon, point_in_polygon
from ..mobility.instructions import Instruction, check_instruction, generate_instruction, path_followable
from ..mobility.navigators import nodes_in_region
from ..mobility.routing import Route, plan_route, shortest_distances
from ..world import World, save_world
from .recognition import N_OPTIONS, VQAItem

VQA_QUESTION = "Which type of place is shown in this image?"


@dataclass(frozen=True)
class SuiteParams:
    n_routes: int = 18
    route_length_range: tuple[float, float] = (80.0, 400.0)
    regions: Optional[Sequence[tuple[str, GeoPolygon]]] = None
    n_vqa: Optional[int] = None  # default: one item per place
    transport_mode: str = "walk"
    max_attempts: int = 200

    def check(self) -> None:
        lo, hi = self.route_length_range
        if self.n_routes < 0 or lo < 0 or hi < lo:
            raise InfeasibleParams("n_routes must be >= 0 and the length range ordered and non-negative")
        if self.n_vqa is not None and self.n_vqa < 0:
            raise InfeasibleParams("n_vqa must be >= 0")


@dataclass(frozen=True)
class Suite:
    seed: int
    world_digest: str
    routes: tuple[Route, ...]
    instructions: tuple[Instruction, ...]
    vqa_items: tuple[VQAItem, ...]
    detection_areas: tuple[Mapping, ...] = field(default=())

    def to_document(self) -> dict:
        return {"seed": self.seed, "world_digest": self.world_digest,
                "routes": [r.to_document() for r in self.routes],
                "instructions": [i.to_document() for i in self.instructions],
                "vqa_items": [v.to_document() for v in self.vqa_items],
                "detection_areas": [dict(a) for a in self.detection_areas]}

    @classmethod
    def from_document(cls, doc: Mapping) -> "Suite":
        return cls(doc["seed"], doc["world_digest"],
                   tuple(Route.from_document(r) for r in doc["routes"]),
                   tuple(Instruction.from_document(i) for i in doc["instructions"]),
                   tuple(VQAItem.from_document(v) for v in doc["vqa_items"]),
                   tuple(doc.get("detection_areas", ())))

    @property
    def hash(self) -> str:
        return digest(self.to_document())

    def pairs(self) -> list[tuple[Route, Instruction]]:
        return list(zip(self.routes, self.instructions))


def _regions(w: World, params: SuiteParams) -> list[tuple[str, GeoPolygon]]:
    if params.regions is not None:
        return list(params.regions)
    if w.regions:
        return w.regions
    lats = [n.coord.lat for n in w.nodes.values()]
    lngs = [n.coord.lng for n in w.nodes.values()]
    pad = 1e-5
    return [("all", GeoPolygon.rectangle(min(lats) - pad, min(lngs) - pad, max(lats) + pad, max(lngs) + pad))]


def _sample_route(w: World, rng: random.Random, starts: list[str], params: SuiteParams,
                  route_id: str, region: str, seed: int) -> tuple[Route, Instruction]:
    lo, hi = params.route_length_range
    for _ in range(params.max_attempts):
        start = rng.choice(starts)
        dist, _ = shortest_distances(w, start)
        goals = sorted(n for n, d in dist.items() if lo <= d <= hi)
        if not goals:
            continue
        goal = rng.choice(goals)
        route = plan_route(w, start, goal, params.transport_mode).with_meta(route_id=route_id, region=region)
        instr = generate_instruction(w, route, stable_seed(seed, route_id))
        check_instruction(w, route, instr)
        # routes the four-action interface cannot trace (e.g. two roads on
        # the same side) are resampled
        if path_followable(w, route, instr):
            return route, instr
    raise InfeasibleParams(f"no followable route of length {lo}-{hi} m starting in region {region}")


def _vqa_items(w: World, rng: random.Random, n: Optional[int]) -> list[VQAItem]:
    places = sorted(w.places)
    if not places:
        if n:
            raise InfeasibleParams("world has no places to build VQA items from")
        return []
    n = len(places) if n is None else n
    order = places[:]
    rng.shuffle(order)
    # answer positions balanced across items, then shuffled
    positions = [k % N_OPTIONS for k in range(n)]
    rng.shuffle(positions)
    vocab = sorted(w.vocabulary)
    items = []
    for k in range(n):
        place = w.places[order[k % len(order)]]
        truth = place.primary_type
        pool = [t for t in vocab if t not in place.types]
        if len(pool) < N_OPTIONS - 1:
            raise InfeasibleParams("vocabulary too small for three distractors")
        options = rng.sample(pool, N_OPTIONS - 1)
        options.insert(positions[k], truth)
        storefront = [r for r in place.photo_refs if r.split("/")[1:2] == ["storefront"]]
        ref = storefront[0] if storefront else f"{place.id}/storefront/0"
        items.append(VQAItem(f"vqa{k:05d}", ref, VQA_QUESTION, tuple(options), positions[k], truth))
    return items


def generate_benchmark_suite(w: World, seed: int, params: Optional[SuiteParams] = None) -> Suite:
    """Routes go round-robin over the regions, each starting inside its region."""
    params = params or SuiteParams()
    params.check()
    regions = _regions(w, params)
    region_nodes = [(name, nodes_in_region(w, poly)) for name, poly in regions]
    if params.n_routes and not any(nodes for _, nodes in region_nodes):
        raise InfeasibleParams("no region contains street nodes")
    usable = [(name, nodes) for name, nodes in region_nodes if nodes]
    if params.n_routes and len(usable) < len(region_nodes):
        empty = [name for name, nodes in region_nodes if not nodes]
        raise InfeasibleParams(f"regions without street nodes: {', '.join(empty)}")
    rng = random.Random(stable_seed("suite", seed))
    routes, instructions = [], []
    for k in range(params.n_routes):
        name, nodes = usable[k % len(usable)]
        route, instr = _sample_route(w, rng, nodes, params, f"route{k:03d}", name, seed)
        routes.append(route)
        instructions.append(instr)
    vqa = _vqa_items(w, random.Random(stable_seed("vqa", seed)), params.n_vqa)
    areas = []
    for name, poly in regions:
        inside = nodes_in_region(w, poly)
        cats = sorted({p.primary_type for p in w.places.values() if point_in_polygon(p.coord, poly)})
        areas.append({"region": name, "vertices": poly.to_pairs(), "n_nodes": len(inside),
                      "categories": cats})
    world_digest = hashlib.sha256(save_world(w)).hexdigest()
    return Suite(seed, world_digest, tuple(routes), tuple(instructions), tuple(vqa), tuple(areas))


def suite_bytes(suite: Suite) -> bytes:
    return dumps(suite.to_document())
