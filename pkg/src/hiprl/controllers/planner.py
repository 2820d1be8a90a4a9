"""Plan / act / observe / replan loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from ..knowledge.goals import IQA_CHECK, GoalSpec, goal_for_question, goal_for_vsp, search_goal_for_vsp
from ..knowledge.problem import ProblemBinding, ground_problem, to_pddl_problem
from ..knowledge.state import (
    KnowledgeState,
    drop_object,
    mark_interaction,
    refute_receptacle,
)
from ..pddl.grounding import GroundAction
from ..planner.search import Outcome, PlannerConfig, plan
from ..world.sim import CLOSE, OPEN, PICKUP, PUT, Env, PrimitiveAction
from ..world.tasks import PUT_IN, TaskSpec
from .base import BUDGET, FAILURE, SUCCESS, ControllerResult, act, finish, look
from .motion import NAV_BUDGET, navigate

PLANNER_BUDGET = 200
# planning itself is bounded so one replan cannot stall an episode
DEFAULT_PLANNER_CONFIG = PlannerConfig(node_budget=20_000)


@dataclass
class PlannerControllerConfig:
    budget: int = PLANNER_BUDGET
    nav_budget: int = NAV_BUDGET
    replan: str = "always"  # or "on_change": keep the current plan until beliefs change unexpectedly
    planner: PlannerConfig = DEFAULT_PLANNER_CONFIG


def subject_tracked(k: KnowledgeState, cls: str) -> bool:
    """A subject instance the planner can act on: held, or inside a known receptacle."""
    live = {r.rid for r in k.live_receptacles()}
    return any(o.tid == k.held or o.containment in live for o in k.objects_of(cls))


def goal_function(task: TaskSpec) -> Callable[[KnowledgeState], GoalSpec]:
    """Goal to plan for, given current beliefs; put-in tasks search for the subject first."""
    if task.kind != PUT_IN:
        g = goal_for_question(task)
        return lambda k: g
    final, search = goal_for_vsp(task), search_goal_for_vsp(task)
    return lambda k: final if subject_tracked(k, task.subject) else search


def _signature(k: KnowledgeState) -> tuple:
    return (
        tuple((o.tid, o.cls, o.containment) for o in k.objects),
        tuple((r.rid, r.cls, r.anchor, r.refuted) for r in k.receptacles),
        k.held,
    )


def execute_ground_action(env: Env, k: KnowledgeState, a: GroundAction, binding: ProblemBinding,
                          nav_budget: int) -> bool:
    """Carry out one plan step in the world; False if it failed."""
    if a.name == "GotoLocation":
        cell, heading = binding.poses[a.args[2]]
        # a failed leg has taught the map something; the next replan picks a new pose
        return navigate(env, k, cell, heading, budget=nav_budget).ok
    if a.name in ("OpenObject", "CloseObject"):
        rid = binding.receptacles[a.args[2]]
        kind = OPEN if a.name == "OpenObject" else CLOSE
        obs = act(env, k, PrimitiveAction(kind, k.receptacle(rid).handle))
        if obs.success:
            mark_interaction(k, PrimitiveAction(kind, k.receptacle(rid).handle), True, record=rid)
        elif kind == OPEN:
            refute_receptacle(k, rid)
        else:
            for r in k.colocated(rid):
                r.opened = False
        look(env, k, 0)
        return obs.success
    if a.name == "PickupObject":
        tid = binding.objects[a.args[2]]
        prim = PrimitiveAction(PICKUP, k.obj(tid).handle)
        obs = act(env, k, prim)
        if obs.success:
            mark_interaction(k, prim, True, tracked=tid)
        else:
            drop_object(k, tid)
        look(env, k, 0)
        return obs.success
    if a.name == "PutObject":
        rid = binding.receptacles[a.args[4]]
        prim = PrimitiveAction(PUT, k.receptacle(rid).handle)
        obs = act(env, k, prim)
        if obs.success:
            mark_interaction(k, prim, True, record=rid)
        else:
            refute_receptacle(k, rid)
        look(env, k, 0)
        return obs.success
    raise ValueError(f"no executor for {a.name}")


def run_planner_controller(env: Env, k: KnowledgeState, goal: Union[GoalSpec, Callable], budget: Optional[int] = None,
                           config: Optional[PlannerControllerConfig] = None, log: Optional[list] = None) -> ControllerResult:
    config = config or PlannerControllerConfig()
    budget = config.budget if budget is None else budget
    goal_fn = goal if callable(goal) else (lambda _k: goal)
    start, before = env.steps, k.summary()
    res = ControllerResult("Planner")
    look(env, k, 0)
    pending: list = []
    pending_sig = None
    while True:
        used = env.steps - start
        if used >= budget:
            res.termination, res.reason = BUDGET, "planner budget"
            break
        if config.replan == "on_change" and pending and _signature(k) == pending_sig:
            a, binding = pending.pop(0)
        else:
            g = goal_fn(k)
            problem, binding = to_pddl_problem(k, g)
            task = ground_problem(problem)
            result = plan(task, config.planner)
            res.replans += 1
            if not res.goals or res.goals[-1] != g.kind:
                res.goals.append(g.kind)
            if log is not None:
                log.append({"t": "replan", "goal": g.kind, "outcome": result.outcome.value,
                            "plan": result.plan.lines() if result.plan else None})
            if result.outcome is Outcome.IMPOSSIBLE:
                res.termination, res.reason = FAILURE, "impossible"
                break
            if result.outcome is Outcome.EXHAUSTED:
                res.termination, res.reason = FAILURE, "search exhausted"
                break
            if not result.plan.actions:
                if g.kind == IQA_CHECK and g.task_kind == PUT_IN:
                    res.termination, res.reason = FAILURE, "subject not found"
                else:
                    res.termination = SUCCESS
                break
            a = result.plan.actions[0]
            pending = [(x, binding) for x in result.plan.actions[1:]]
        remaining = budget - (env.steps - start)
        ok = execute_ground_action(env, k, a, binding, min(config.nav_budget, remaining))
        pending_sig = _signature(k)
        if not ok:
            pending = []
    return finish(res, env, start, before, k)
