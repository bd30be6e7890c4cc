"""Structured route instructions with a seeded template verbalization.

The structured segments are the contract; the text is presentation.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..canonical import check_document, stable_seed
from ..geo import haversine_distance
from ..world import World
from .movers import AgentState
from .routing import Route, turn_action
from .vln import VLNObservation, action_target, observe, trigger_fires

LANDMARK_RADIUS_M = 40.0
START_TURNS = (0.0, -90.0, 90.0)  # agent starts facing the first road, or with it to a side


@dataclass(frozen=True)
class Trigger:
    kind: str  # at_start | at_intersection | at_landmark | after_moves | at_destination
    ordinal: Optional[int] = None
    place_id: Optional[str] = None
    name: Optional[str] = None
    side: Optional[str] = None
    after_moves: Optional[int] = None

    def to_document(self) -> dict:
        doc = {"kind": self.kind}
        for k in ("ordinal", "place_id", "name", "side", "after_moves"):
            v = getattr(self, k)
            if v is not None:
                doc[k] = v
        return doc

    @classmethod
    def from_document(cls, doc: Mapping) -> "Trigger":
        return cls(doc["kind"], doc.get("ordinal"), doc.get("place_id"), doc.get("name"),
                   doc.get("side"), doc.get("after_moves"))


@dataclass(frozen=True)
class Segment:
    action: str
    trigger: Trigger


@dataclass(frozen=True)
class Instruction:
    segments: tuple[Segment, ...]
    verbalization: str
    start_heading: float = 0.0
    route_id: str = ""

    def __post_init__(self):
        if not self.segments or self.segments[-1].action != "stop":
            raise ValueError("an instruction must end with a stop segment")

    @property
    def landmark_ids(self) -> list[str]:
        return [s.trigger.place_id for s in self.segments if s.trigger.place_id is not None]

    @property
    def landmark_names(self) -> list[str]:
        return sorted({s.trigger.name for s in self.segments if s.trigger.name is not None})

    def to_document(self) -> dict:
        return {"route_id": self.route_id, "start_heading": self.start_heading,
                "segments": [{"action": s.action, "trigger": s.trigger.to_document()}
                             for s in self.segments],
                "verbalization": self.verbalization}

    @classmethod
    def from_document(cls, doc: Mapping) -> "Instruction":
        check_document(doc, "instruction.schema.json")
        segs = tuple(Segment(s["action"], Trigger.from_document(s["trigger"])) for s in doc["segments"])
        return cls(segs, doc["verbalization"], float(doc["start_heading"]), doc.get("route_id", ""))


def landmark_candidate(w: World, node_id: str, radius: float = LANDMARK_RADIUS_M) -> Optional[str]:
    """Nearest reviewed place to the node within ``radius`` (ties by id)."""
    coord = w.node(node_id).coord
    for pid, _ in w.places_within(coord, radius):
        if w.places[pid].reviews:
            return pid
    return None


def expected_actions(route: Route, segments: Sequence[Segment]) -> list[str]:
    """The action the instruction demands at each node of the route path."""
    path = route.path
    acts = ["forward"] * len(path)
    if len(path) == 1:
        return ["stop"]
    for kp, seg in zip(route.key_positions, segments):
        acts[kp.index] = seg.action
    return acts


def _poses_along(w: World, route: Route, start_heading: float) -> list[AgentState]:
    """Agent states at each path node when following the route exactly."""
    path = route.path
    s = AgentState(path[0], AgentState.at(w, path[0], start_heading).pose)
    out = [s]
    for a, b in zip(path, path[1:]):
        s = s.moved_to(b, s.pose.replace(heading=w.nodes[a].edge_to(b).heading))
        out.append(s)
    return out


def path_followable(w: World, route: Route, instr: "Instruction") -> bool:
    """True if executing the demanded actions from the start reproduces the route path."""
    path = route.path
    acts = expected_actions(route, instr.segments)
    s = AgentState.at(w, path[0], instr.start_heading)
    for i, act in enumerate(acts):
        if act == "stop":
            return i == len(path) - 1
        target = action_target(w, s, act)
        if target is None or i + 1 >= len(path) or target[1] != path[i + 1]:
            return False
        s = s.moved_to(target[1], s.pose.replace(heading=target[0]))
    return False


def _first_fire(trigger: Trigger, observations: Sequence[VLNObservation], lo: int, hi: int,
                degrees: Sequence[int]) -> Optional[int]:
    """First path index in (lo, hi] where ``trigger`` fires, counting from key position ``lo``."""
    moves = inter = 0
    for i in range(lo + 1, hi + 1):
        moves += 1
        if degrees[i] >= 3:
            inter += 1
        if trigger_fires(trigger, observations[i], 1, moves, inter):
            return i
    return None


def _side_of(obs: VLNObservation, name: str) -> Optional[str]:
    for label, names in obs.directional_views:
        if name in names:
            return label
    return None


def generate_instruction(w: World, route: Route, seed: int, detector=None) -> Instruction:
    """One segment per key position, landmark triggers where they are unambiguous.

    A landmark is used only if, walking the route, its trigger first fires
    exactly at the key position; otherwise the segment falls back to an
    intersection ordinal (or a move count off intersections).
    """
    rng = random.Random(stable_seed("instruction", seed, route.route_id, *route.path))
    path = route.path
    if len(path) == 1:
        segs = (Segment("stop", Trigger("at_destination", after_moves=0)),)
        return Instruction(segs, verbalize(segs, seed), 0.0, route.route_id)
    first = route.start_heading if route.start_heading is not None else w.nodes[path[0]].edge_to(path[1]).heading
    start_heading = (first + rng.choice(START_TURNS)) % 360.0
    states = _poses_along(w, route, start_heading)
    degrees = [w.nodes[n].degree for n in path]
    # oracle views of every candidate landmark; names decide what a detector can report
    cands = {kp.index: landmark_candidate(w, kp.node_id) for kp in route.key_positions[1:]}
    names = sorted({w.places[p].name for p in cands.values() if p is not None})
    observations = [observe(w, s, names, detector) for s in states]

    segs = [Segment(turn_action(start_heading, first), Trigger("at_start"))]
    keys = route.key_positions
    for prev, kp in zip(keys, keys[1:]):
        last = kp is keys[-1]
        i = kp.index
        if last:
            action = "stop"
        else:
            action = turn_action(states[i].pose.heading, states[i + 1].pose.heading)
        trigger = None
        pid = cands.get(i)
        if pid is not None:
            name = w.places[pid].name
            side = _side_of(observations[i], name)
            if side is not None:
                t = Trigger("at_destination" if last else "at_landmark", place_id=pid, name=name, side=side)
                if _first_fire(t, observations, prev.index, i, degrees) == i:
                    trigger = t
        if trigger is None:
            if last:
                trigger = Trigger("at_destination", after_moves=i - prev.index)
            elif degrees[i] >= 3:
                trigger = Trigger("at_intersection", ordinal=sum(d >= 3 for d in degrees[prev.index + 1:i + 1]))
            else:
                trigger = Trigger("after_moves", after_moves=i - prev.index)
        segs.append(Segment(action, trigger))
    segs = tuple(segs)
    return Instruction(segs, verbalize(segs, seed), start_heading, route.route_id)


# -- verbalization

_ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth")
_ACTION_TEXT = {"forward": "go straight", "turn_left": "turn left", "turn_right": "turn right"}
_SIDE_TEXT = {"front": "ahead of you", "left_front": "ahead on your left", "left": "on your left",
              "left_behind": "behind you on the left", "behind": "behind you",
              "right_behind": "behind you on the right", "right": "on your right",
              "right_front": "ahead on your right"}
_START = ("First, {a}.", "To begin, {a}.", "Start off: {a}.")
_AT_INTERSECTION = ("At the {o} intersection, {a}.", "When you reach the {o} intersection, {a}.",
                    "Keep going until the {o} intersection, then {a}.")
_AT_LANDMARK = ("When you see {n} {s}, {a}.", "Once {n} is {s} at an intersection, {a}.",
                "Look for {n} {s}; there, {a}.")
_AFTER_MOVES = ("After {m} street segments, {a}.", "Walk {m} segments, then {a}.")
_DEST_LANDMARK = ("Stop when {n} is {s}.", "Your destination is where {n} appears {s}.")
_DEST_MOVES = ("Continue for {m} more segments and stop.", "Walk {m} more segments; you have arrived.")


def _ordinal(n: int) -> str:
    return _ORDINALS[n - 1] if 0 < n <= len(_ORDINALS) else f"{n}th"


def verbalize(segments: Sequence[Segment], seed: int) -> str:
    """Deterministic template rendering of the segments."""
    rng = random.Random(stable_seed("verbalize", seed, len(segments)))
    out = []
    for seg in segments:
        t = seg.trigger
        a = _ACTION_TEXT.get(seg.action, "stop")
        if t.kind == "at_start":
            out.append(rng.choice(_START).format(a=a))
        elif t.kind == "at_intersection":
            out.append(rng.choice(_AT_INTERSECTION).format(o=_ordinal(t.ordinal), a=a))
        elif t.kind == "at_landmark":
            out.append(rng.choice(_AT_LANDMARK).format(n=t.name, s=_SIDE_TEXT[t.side], a=a))
        elif t.kind == "after_moves":
            out.append(rng.choice(_AFTER_MOVES).format(m=t.after_moves, a=a))
        elif t.name is not None:
            out.append(rng.choice(_DEST_LANDMARK).format(n=t.name, s=_SIDE_TEXT[t.side]))
        elif t.after_moves == 0:
            out.append("You are already there; stop.")
        else:
            out.append(rng.choice(_DEST_MOVES).format(m=t.after_moves))
    return " ".join(out)


def check_instruction(w: World, route: Route, instr: Instruction) -> None:
    """Raise ValueError unless the instruction is well formed for the route."""
    if instr.segments[-1].action != "stop":
        raise ValueError("last segment must stop")
    for pid in instr.landmark_ids:
        if pid not in w.places:
            raise ValueError(f"landmark {pid} not in world")
    expected = 1 if len(route.path) == 1 else len(route.key_positions)
    if len(instr.segments) != expected:
        raise ValueError("one segment per key position required")


def landmark_distance(w: World, route: Route, instr: Instruction) -> list[float]:
    """Distance from each landmark to its key position, for diagnostics."""
    out = []
    for kp, seg in zip(route.key_positions, instr.segments):
        if seg.trigger.place_id is not None:
            out.append(haversine_distance(w.nodes[kp.node_id].coord, w.places[seg.trigger.place_id].coord))
    return out


__all__ = [
    "Instruction", "LANDMARK_RADIUS_M", "Segment", "Trigger", "check_instruction",
    "expected_actions", "generate_instruction", "landmark_candidate", "landmark_distance",
    "path_followable", "verbalize",
]
