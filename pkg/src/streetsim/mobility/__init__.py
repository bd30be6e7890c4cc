"""Movement over the street graph: movers, routing and the navigator families."""
from .instructions import (Instruction, Segment, Trigger, check_instruction, expected_actions,
                           generate_instruction, landmark_candidate, path_followable, verbalize)
from .movers import AgentState, STEP_TOLERANCE_DEG, TrajectoryEntry, navigable_directions, step
from .navigators import (KeywordReasoner, caption_view, intention_navigate_choose, navigate_by_intention,
                         nodes_in_region, parse_index, plan_cost, point_navigate, point_step,
                         region_navigate_plan)
from .routing import (EXACT_WAYPOINT_LIMIT, MODE_SPEEDS_MPS, KeyPosition, Route, estimate_travel_time,
                      optimize_waypoint_order, path_distance, plan_route, route_from_path, route_through,
                      shortest_path, turn_action)
from .vln import (ACTIONS, VIEW_LABELS, ChooserPolicy, ScriptedPolicy, VLNObservation, action_target,
                  execute_action, observe, trigger_fires, vln_step)

__all__ = [
    "ACTIONS", "AgentState", "ChooserPolicy", "EXACT_WAYPOINT_LIMIT", "Instruction", "KeyPosition",
    "KeywordReasoner", "MODE_SPEEDS_MPS", "Route", "STEP_TOLERANCE_DEG", "ScriptedPolicy", "Segment",
    "TrajectoryEntry", "Trigger", "VIEW_LABELS", "VLNObservation", "action_target", "caption_view",
    "check_instruction", "estimate_travel_time", "execute_action", "expected_actions",
    "generate_instruction", "intention_navigate_choose", "landmark_candidate", "navigable_directions",
    "navigate_by_intention", "nodes_in_region", "observe", "optimize_waypoint_order", "parse_index",
    "path_distance", "path_followable", "plan_cost", "plan_route", "point_navigate", "point_step",
    "region_navigate_plan", "route_from_path", "route_through", "shortest_path", "step", "trigger_fires",
    "turn_action", "verbalize", "vln_step",
]
