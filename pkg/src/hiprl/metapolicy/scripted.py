"""Fixed meta-policies used as baselines."""

from __future__ import annotations

from ..controllers.base import BUDGET
from ..controllers.planner import DEFAULT_PLANNER_CONFIG, goal_function
from ..knowledge.problem import ground_problem, to_pddl_problem
from ..planner.search import Outcome, plan
from .episode import Agent, Context
from .features import META_ACTIONS
from .policy import MetaPolicy

PLANNER_ONLY = "PlannerOnly"
LEARNER_ONLY = "LearnerOnly"
RANDOM = "Random"
ANSWER_IMMEDIATELY = "AnswerImmediately"
SCRIPTED_KINDS = (PLANNER_ONLY, LEARNER_ONLY, RANDOM, ANSWER_IMMEDIATELY)


def initial_plan_usable(ctx: Context) -> bool:
    """True when the planner already has something to do from the start pose."""
    problem, _ = to_pddl_problem(ctx.k, goal_function(ctx.task)(ctx.k))
    result = plan(ground_problem(problem), DEFAULT_PLANNER_CONFIG)
    return result.outcome is Outcome.PLAN and bool(result.plan.actions)


class PlannerOnlyAgent(Agent):
    """Scan once if the opening plan is empty, run the planner to completion, then stop."""

    name = PLANNER_ONLY

    def begin(self, ctx: Context) -> None:
        self.pending_scan = not initial_plan_usable(ctx)

    def decide(self, ctx: Context) -> str:
        if self.pending_scan:
            self.pending_scan = False
            return "Scanner"
        h = ctx.history
        # a planner run cut short by its own step budget is resumed, not ended
        if h.last == "Planner" and h.last_termination != BUDGET:
            return "Stopper"
        return "Planner"


class RandomAgent(Agent):
    name = RANDOM

    def decide(self, ctx: Context) -> str:
        return META_ACTIONS[int(ctx.rng.integers(len(META_ACTIONS)))]


class AnswerImmediatelyAgent(Agent):
    name = ANSWER_IMMEDIATELY

    def decide(self, ctx: Context) -> str:
        return "Stopper"


def learner_only_policy(temperature: float = 1.0) -> MetaPolicy:
    return MetaPolicy(temperature=temperature, allowed=("Explorer", "Scanner", "Stopper"), name=LEARNER_ONLY)


def scripted_policy(kind: str):
    if kind == PLANNER_ONLY:
        return PlannerOnlyAgent()
    if kind == LEARNER_ONLY:
        return learner_only_policy()
    if kind == RANDOM:
        return RandomAgent()
    if kind == ANSWER_IMMEDIATELY:
        return AnswerImmediatelyAgent()
    raise ValueError(f"unknown scripted policy {kind!r}")
