"""Vision-language navigation: observations, action execution and policies.

Actions move the agent along the street graph relative to its heading:

* ``forward`` takes the road closest to straight ahead (within 45 deg). At
  nodes with two or fewer roads it follows the road around a bend instead.
* ``turn_left`` / ``turn_right`` take the road closest to 90 deg on that side
  (anything between 45 and 180 deg off the heading counts as that side).
* ``stop`` ends the episode.

An action with no matching road leaves the agent in place.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, Sequence

from ..errors import InvalidAction, UnparseableAnswer
from ..geo import Pose, angular_offset
from ..perception.camera import render_view
from ..perception.providers import Detector, OracleDetector, detect
from ..world import World
from .movers import AgentState, navigable_directions

ACTIONS = ("forward", "turn_left", "turn_right", "stop")
VIEW_LABELS = ("front", "left_front", "left", "left_behind", "behind", "right_behind", "right",
               "right_front")
VIEW_OFFSETS = (0.0, -45.0, -90.0, -135.0, 180.0, 135.0, 90.0, 45.0)
VIEW_FOV = 45.0
OBSERVATION_RANGE_M = 50.0
FORWARD_CONE_DEG = 45.0
BACK_CONE_DEG = 135.0


@dataclass(frozen=True)
class VLNObservation:
    # (label, landmark names detected in that view) in VIEW_LABELS order
    directional_views: tuple[tuple[str, tuple[str, ...]], ...]
    intersection_degree: int

    def __post_init__(self):
        if tuple(label for label, _ in self.directional_views) != VIEW_LABELS:
            raise ValueError("observation needs exactly the 8 directional views in fixed order")

    def seen_at(self, side: str) -> tuple[str, ...]:
        return dict(self.directional_views)[side]

    def to_document(self) -> dict:
        return {"views": {label: list(names) for label, names in self.directional_views},
                "intersection_degree": self.intersection_degree}


def observe(w: World, s: AgentState, landmark_names: Sequence[str],
            detector: Optional[Detector] = None,
            visibility_range: float = OBSERVATION_RANGE_M) -> VLNObservation:
    """Eight views around the agent, each reduced to the landmark names detected in it."""
    detector = detector or OracleDetector()
    names = sorted(set(landmark_names))
    views = []
    for label, off in zip(VIEW_LABELS, VIEW_OFFSETS):
        found: tuple[str, ...] = ()
        if names:
            view = render_view(w, s.node_id, Pose(heading=s.pose.heading + off, fov=VIEW_FOV),
                               visibility_range)
            found = tuple(sorted({p.label for p in detect(view, names, detector)}))
        views.append((label, found))
    return VLNObservation(tuple(views), len(navigable_directions(w, s.node_id, "grid")))


def action_target(w: World, s: AgentState, action: str, mode: str = "grid") -> Optional[tuple[float, str]]:
    """The (heading, neighbor) an action would move along, or None."""
    if action not in ACTIONS:
        raise InvalidAction(f"unknown action {action!r}")
    if action == "stop":
        return None
    dirs = navigable_directions(w, s.node_id, mode)
    scored = [(angular_offset(s.pose.heading, h), h, nb) for h, nb in dirs]
    if action == "forward":
        ahead = [(abs(o), h, nb) for o, h, nb in scored if abs(o) <= BACK_CONE_DEG]
        if not ahead:
            return None
        best = min(ahead)
        if best[0] > FORWARD_CONE_DEG and len(dirs) > 2:
            return None
        return best[1], best[2]
    sign = -1.0 if action == "turn_left" else 1.0
    side = [(abs(o - sign * 90.0), h, nb) for o, h, nb in scored if sign * o > FORWARD_CONE_DEG]
    if not side:
        return None
    best = min(side)
    return best[1], best[2]


def execute_action(w: World, s: AgentState, action: str, mode: str = "grid") -> AgentState:
    target = action_target(w, s, action, mode)
    if target is None:
        return s
    h, nb = target
    return s.moved_to(nb, s.pose.replace(heading=h))


# -- policies

class Policy(Protocol):
    def reset(self, instruction) -> None:
        ...

    def act(self, obs: VLNObservation, instruction) -> Any:
        ...


def trigger_fires(trigger, obs: VLNObservation, steps: int, moves: int, intersections: int) -> bool:
    """Whether ``trigger`` is satisfied now.

    ``steps`` counts policy calls in the episode, ``moves`` and
    ``intersections`` count arrivals since the last satisfied trigger.
    """
    kind = trigger.kind
    if kind == "at_start":
        return steps == 0
    if kind == "at_intersection":
        return obs.intersection_degree >= 3 and intersections == trigger.ordinal
    if kind == "at_landmark":
        return obs.intersection_degree >= 3 and trigger.name in obs.seen_at(trigger.side)
    if kind == "after_moves":
        return moves == trigger.after_moves
    if kind == "at_destination":
        if trigger.name is not None:
            return moves > 0 and trigger.name in obs.seen_at(trigger.side)
        return moves == trigger.after_moves
    raise ValueError(f"unknown trigger kind {kind!r}")


@dataclass
class ScriptedPolicy:
    """Finite-state oracle policy: segment pointer plus counters since the last trigger.

    Each call after the first is taken to be one arrival at a new node.
    """

    pointer: int = 0
    steps: int = 0
    moves: int = 0
    intersections: int = 0
    log: list = field(default_factory=list)

    def reset(self, instruction=None) -> None:
        self.pointer = self.steps = self.moves = self.intersections = 0
        self.log = []

    def act(self, obs: VLNObservation, instruction) -> str:
        if self.steps > 0:
            self.moves += 1
            if obs.intersection_degree >= 3:
                self.intersections += 1
        action = "forward"
        segments = instruction.segments
        if self.pointer < len(segments):
            seg = segments[self.pointer]
            if trigger_fires(seg.trigger, obs, self.steps, self.moves, self.intersections):
                action = seg.action
                self.pointer += 1
                self.moves = self.intersections = 0
        self.steps += 1
        self.log.append(action)
        return action


class ChooserPolicy:
    """Delegates each decision to a chooser provider over the four actions.

    The provider may answer with an option index or the action name.
    """

    def __init__(self, chooser):
        self.chooser = chooser
        self.history: list[str] = []

    def reset(self, instruction=None) -> None:
        self.history = []

    def act(self, obs: VLNObservation, instruction) -> Any:
        context = {"instruction": instruction.verbalization, "observation": obs.to_document(),
                   "history": list(self.history)}
        reply = self.chooser.choose(list(ACTIONS), context)
        try:
            answer, _ = reply
        except (TypeError, ValueError):
            raise UnparseableAnswer(f"policy returned {reply!r}") from None
        if isinstance(answer, int) and not isinstance(answer, bool) and 0 <= answer < len(ACTIONS):
            answer = ACTIONS[answer]
        self.history.append(str(answer))
        return answer


def vln_step(s: AgentState, obs: VLNObservation, instr, policy) -> str:
    """Ask ``policy`` for the next action and check it is in the action set."""
    action = policy.act(obs, instr)
    if not isinstance(action, str) or action not in ACTIONS:
        raise InvalidAction(f"policy answered {action!r}, expected one of {ACTIONS}")
    return action
