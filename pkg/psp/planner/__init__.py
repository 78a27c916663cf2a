"""
Online safe planning on a synthetic gated course.

RRT* trees are grown against the known map; every edge is checked against
the current obstacle belief with the edge clearance program before
Dijkstra picks the path.
"""

from psp.planner.belief import ObstacleBelief, update_belief
from psp.planner.mission import AuditResult, MissionResult, audit_log, run_mission, run_missions
from psp.planner.rrt import EdgeVerdict, PlanResult, PlanTree, build_tree, check_edge, plan_cycle
from psp.planner.sensor import Scan, sense
from psp.planner.settings import PlannerConfig, load_planner_config
from psp.planner.world import Gate, World, WorldError, default_course, load_world, save_world

__all__ = [
    'AuditResult', 'EdgeVerdict', 'Gate', 'MissionResult', 'ObstacleBelief', 'PlanResult', 'PlanTree',
    'PlannerConfig', 'Scan', 'World', 'WorldError', 'audit_log', 'build_tree', 'check_edge',
    'default_course', 'load_planner_config', 'load_world', 'plan_cycle', 'run_mission', 'run_missions',
    'save_world', 'sense', 'update_belief',
]
