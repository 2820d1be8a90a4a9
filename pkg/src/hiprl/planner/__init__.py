"""FF-style satisficing planner over grounded tasks."""

from ..pddl import Domain, Problem, ground
from .rpg import INF, HeuristicResult, RelaxedPlanningGraph, build_rpg, ff_heuristic
from .search import (
    Outcome,
    Plan,
    PlannerConfig,
    PlanResult,
    SearchStats,
    enforced_hill_climb,
    greedy_best_first,
    plan,
)
from .validate import ValidationReport, validate


def solve(domain: Domain, problem: Problem, config: PlannerConfig = None):
    """Ground and plan; returns (task, result)."""
    task = ground(domain, problem)
    return task, plan(task, config)
