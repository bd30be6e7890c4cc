"""Navigable-direction queries and single steps along the street graph."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from ..errors import NoEdgeInDirection, UnknownMode
from ..geo import Pose, angular_offset
from ..world import World

MoverMode = Literal["web", "grid"]
STEP_TOLERANCE_DEG = 15.0


@dataclass(frozen=True)
class TrajectoryEntry:
    node_id: str
    pose: Pose
    step_index: int


@dataclass(frozen=True)
class AgentState:
    node_id: str
    pose: Pose = field(default_factory=Pose)
    trajectory: tuple[TrajectoryEntry, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        if not self.trajectory:
            object.__setattr__(self, "trajectory", (TrajectoryEntry(self.node_id, self.pose, 0),))

    @classmethod
    def at(cls, w: World, node_id: str, heading: float = 0.0, rng_seed: int = 0) -> "AgentState":
        w.node(node_id)
        return cls(node_id, Pose(heading=heading), rng_seed=rng_seed)

    @property
    def step_index(self) -> int:
        return self.trajectory[-1].step_index

    def moved_to(self, node_id: str, pose: Pose) -> "AgentState":
        entry = TrajectoryEntry(node_id, pose, self.step_index + 1)
        return AgentState(node_id, pose, self.trajectory + (entry,), self.rng_seed)

    def turned(self, pose: Pose) -> "AgentState":
        return AgentState(self.node_id, pose, self.trajectory, self.rng_seed)

    @property
    def visited(self) -> list[str]:
        return [e.node_id for e in self.trajectory]


def navigable_directions(w: World, node_id: str, mode: MoverMode = "grid") -> list[tuple[float, str]]:
    """(heading, neighbor id) pairs, sorted by heading.

    The grid mover sees every graph edge; the web mover only what the embedded
    panorama exposes.
    """
    node = w.node(node_id)
    if mode == "grid":
        edges = node.neighbors
    elif mode == "web":
        edges = [e for e in node.neighbors if e.node_id in node.web_visible_neighbors]
    else:
        raise UnknownMode(f"unknown mover mode {mode!r}")
    return sorted(((e.heading, e.node_id) for e in edges), key=lambda t: (t[0], t[1]))


def step(w: World, s: AgentState, heading: float, mode: MoverMode = "grid") -> AgentState:
    best = None
    for h, nb in navigable_directions(w, s.node_id, mode):
        off = abs(angular_offset(heading, h))
        if off <= STEP_TOLERANCE_DEG and (best is None or (off, h) < best[:2]):
            best = (off, h, nb)
    if best is None:
        raise NoEdgeInDirection(f"no {mode} edge within {STEP_TOLERANCE_DEG} deg of heading "
                                f"{heading:.1f} at node {s.node_id}")
    _, h, nb = best
    return s.moved_to(nb, s.pose.replace(heading=h))
