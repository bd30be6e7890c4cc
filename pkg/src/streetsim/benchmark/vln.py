"""Instruction-following episodes and Success / Arr / Reac scoring."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

from ..canonical import stable_seed
from ..geo import haversine_distance
from ..mobility.instructions import Instruction, expected_actions
from ..mobility.movers import AgentState
from ..mobility.routing import Route
from ..mobility.vln import ScriptedPolicy, execute_action, observe, vln_step
from ..perception.providers import OracleDetector
from ..world import World

SUCCESS_RADIUS_M = 25.0
BUDGET_FACTOR = 3
KEY_CLASSES = ("start", "intersection", "stop")


@dataclass(frozen=True)
class KeyOutcome:
    kind: str  # start | intersection | stop
    node_id: str
    expected: str
    reached: bool
    action: Optional[str]  # action taken on first arrival, None if never reached
    correct: bool


@dataclass(frozen=True)
class VLNRecord:
    route_id: str
    region: str
    success: bool
    stopped: bool
    budget_exhausted: bool
    steps: int
    final_node: str
    final_distance_m: float
    keys: tuple[KeyOutcome, ...]
    actions: tuple[str, ...] = ()

    def counts(self, kind: str) -> tuple[int, int, int]:
        """(total, reached, correct) over key positions of one class."""
        ks = [k for k in self.keys if k.kind == kind]
        return len(ks), sum(k.reached for k in ks), sum(k.correct for k in ks)

    def arr(self, kind: str) -> Optional[float]:
        total, reached, _ = self.counts(kind)
        return reached / total if total else None

    def reac(self, kind: str) -> Optional[float]:
        _, reached, correct = self.counts(kind)
        return correct / reached if reached else None

    def summary(self) -> dict:
        return {"success": self.success, "start_reac": self.reac("start"),
                "intersection_arr": self.arr("intersection"),
                "intersection_reac": self.reac("intersection"),
                "stop_arr": self.arr("stop"), "stop_reac": self.reac("stop")}

    def to_document(self) -> dict:
        doc = asdict(self)
        doc["keys"] = [asdict(k) for k in self.keys]
        doc["actions"] = list(self.actions)
        doc["summary"] = self.summary()
        return doc

    @classmethod
    def from_document(cls, doc: Mapping) -> "VLNRecord":
        keys = tuple(KeyOutcome(**k) for k in doc["keys"])
        return cls(doc["route_id"], doc["region"], doc["success"], doc["stopped"],
                   doc["budget_exhausted"], doc["steps"], doc["final_node"],
                   doc["final_distance_m"], keys, tuple(doc.get("actions", ())))


def run_vln_episode(w: World, route: Route, instr: Instruction, perception=None, policy=None,
                    threshold_m: float = SUCCESS_RADIUS_M, budget: Optional[int] = None,
                    mode: str = "grid") -> VLNRecord:
    """Run the observe/act loop until the policy stops or the step budget runs out.

    Running out of budget is recorded as a failed episode, not raised.
    """
    perception = perception or OracleDetector()
    policy = policy if policy is not None else ScriptedPolicy()
    path = route.path
    budget = budget if budget is not None else BUDGET_FACTOR * len(path)
    dest = w.node(route.stop).coord
    policy.reset(instr)
    s = AgentState.at(w, route.start, instr.start_heading,
                      rng_seed=stable_seed(w.meta.get("seed", 0), route.route_id))
    names = instr.landmark_names
    first_action: dict[str, str] = {}
    min_dist = haversine_distance(w.nodes[s.node_id].coord, dest)
    actions = []
    stopped = False
    for _ in range(budget):
        obs = observe(w, s, names, perception)
        action = vln_step(s, obs, instr, policy)
        actions.append(action)
        first_action.setdefault(s.node_id, action)
        if action == "stop":
            stopped = True
            break
        s = execute_action(w, s, action, mode)
        min_dist = min(min_dist, haversine_distance(w.nodes[s.node_id].coord, dest))
    final_d = haversine_distance(w.nodes[s.node_id].coord, dest)
    success = stopped and final_d <= threshold_m

    expected = expected_actions(route, instr.segments)
    keys = []
    n_keys = len(route.key_positions)
    for k, kp in enumerate(route.key_positions):
        if k == 0:
            kind = "start"
        elif k == n_keys - 1:
            kind = "stop"
        else:
            kind = "intersection"
        want = expected[min(kp.index, len(expected) - 1)]
        if kind == "stop":
            reached = min_dist <= threshold_m
            taken = actions[-1] if reached and stopped else None
            keys.append(KeyOutcome(kind, kp.node_id, "stop", reached, taken, reached and success))
        else:
            taken = first_action.get(kp.node_id)
            keys.append(KeyOutcome(kind, kp.node_id, want, taken is not None, taken, taken == want))
    return VLNRecord(route.route_id, route.region, success, stopped, not stopped, len(actions),
                     s.node_id, final_d, tuple(keys), tuple(actions))


@dataclass(frozen=True)
class VLNReport:
    n_routes: int
    success: float
    arr: Mapping[str, Optional[float]]
    reac: Mapping[str, Optional[float]]
    per_route: tuple[dict, ...] = field(default=())

    def to_document(self) -> dict:
        return {"n_routes": self.n_routes, "success": self.success, "arr": dict(self.arr),
                "reac": dict(self.reac), "per_route": [dict(r) for r in self.per_route]}

    @classmethod
    def from_document(cls, doc: Mapping) -> "VLNReport":
        return cls(doc["n_routes"], doc["success"], dict(doc["arr"]), dict(doc["reac"]),
                   tuple(doc.get("per_route", ())))


def aggregate_vln(records: Sequence[VLNRecord]) -> VLNReport:
    """Pool key-position counts over routes.

    Arr = reached / total; Reac = correct / reached, so unreached positions
    never count against Reac.
    """
    if not records:
        raise ValueError("need at least one record")
    arr, reac = {}, {}
    for kind in KEY_CLASSES:
        total = sum(r.counts(kind)[0] for r in records)
        reached = sum(r.counts(kind)[1] for r in records)
        correct = sum(r.counts(kind)[2] for r in records)
        arr[kind] = reached / total if total else None
        reac[kind] = correct / reached if reached else None
    success = sum(r.success for r in records) / len(records)
    per_route = tuple(dict(route_id=r.route_id, region=r.region, **r.summary()) for r in records)
    return VLNReport(len(records), success, arr, reac, per_route)
