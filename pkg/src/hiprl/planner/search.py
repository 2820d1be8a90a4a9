"""Enforced hill-climbing with a greedy best-first fallback."""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from ..pddl.grounding import GroundAction, GroundTask, eval_formula, successor_bits
from .rpg import INF, ff_heuristic


class Outcome(str, Enum):
    PLAN = "plan"
    IMPOSSIBLE = "impossible"
    EXHAUSTED = "exhausted"


@dataclass
class Plan:
    actions: list[GroundAction]
    cost: float

    def __len__(self) -> int:
        return len(self.actions)

    def lines(self) -> list[str]:
        return [a.label() for a in self.actions]


@dataclass
class SearchStats:
    expanded: int = 0
    evaluations: int = 0
    wall_time: float = 0.0
    method: str = ""

    def counters(self) -> dict:
        return {"expanded": self.expanded, "evaluations": self.evaluations, "method": self.method}


@dataclass
class PlanResult:
    outcome: Outcome
    plan: Optional[Plan] = None
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.PLAN


@dataclass
class PlannerConfig:
    ehc_enabled: bool = True
    node_budget: int = 200_000
    time_budget: Optional[float] = None
    plateau_limit: int = 10_000


class _Budget(Exception):
    pass


def _make_plan(task: GroundTask, actions: list[GroundAction]) -> Plan:
    return Plan(list(actions), float(sum(a.cost for a in actions)))


def enforced_hill_climb(task: GroundTask, plateau_limit: int = 10_000, stats: Optional[SearchStats] = None) -> PlanResult:
    """FF's enforced hill-climbing restricted to helpful actions.

    Returns EXHAUSTED when a plateau search fails (dead end or plateau
    limit); the caller decides whether to fall back.
    """
    stats = stats or SearchStats(method="ehc")
    start = time.perf_counter()
    actions = task.actions
    bits = task.init.bits
    res = ff_heuristic(task, bits)
    stats.evaluations += 1
    if res.h == INF:
        stats.wall_time += time.perf_counter() - start
        return PlanResult(Outcome.IMPOSSIBLE, stats=stats)
    h, helpful = res.h, res.helpful
    path: list[GroundAction] = []
    while h > 0:
        visited = {bits}
        queue = deque([(bits, helpful, ())])
        improved = None
        while queue and improved is None:
            s, s_helpful, s_path = queue.popleft()
            stats.expanded += 1
            # cheaper moves first, so the first improving state found tends to be the cheap one
            for ai in sorted(s_helpful, key=lambda i: (actions[i].cost, i)):
                a = actions[ai]
                t = successor_bits(a, s)
                if t in visited:
                    continue
                visited.add(t)
                r = ff_heuristic(task, t)
                stats.evaluations += 1
                if r.h == INF:
                    continue
                if r.h < h:
                    improved = (t, r, s_path + (ai,))
                    break
                queue.append((t, r.helpful, s_path + (ai,)))
            if len(visited) > plateau_limit:
                break
        if improved is None:
            stats.wall_time += time.perf_counter() - start
            return PlanResult(Outcome.EXHAUSTED, stats=stats)
        bits, r, steps = improved
        path.extend(actions[ai] for ai in steps)
        h, helpful = r.h, r.helpful
    stats.wall_time += time.perf_counter() - start
    return PlanResult(Outcome.PLAN, _make_plan(task, path), stats)


def greedy_best_first(
    task: GroundTask,
    node_budget: int = 200_000,
    time_budget: Optional[float] = None,
    stats: Optional[SearchStats] = None,
) -> PlanResult:
    """Best-first search on h over all applicable actions, FIFO among equal h.

    States with infinite h are pruned (sound under the delete relaxation),
    so an emptied open list proves the goal unreachable.
    """
    stats = stats or SearchStats(method="gbfs")
    start = time.perf_counter()
    actions = task.actions
    init = task.init.bits
    r0 = ff_heuristic(task, init)
    stats.evaluations += 1
    if r0.h == INF:
        stats.wall_time += time.perf_counter() - start
        return PlanResult(Outcome.IMPOSSIBLE, stats=stats)
    parents: dict[int, Optional[tuple[int, int]]] = {init: None}
    counter = 0
    heap = [(r0.h, counter, init)]
    goal_bits = None
    if r0.h == 0:
        goal_bits = init
    while heap and goal_bits is None:
        _, _, s = heapq.heappop(heap)
        stats.expanded += 1
        if stats.expanded > node_budget or (
            time_budget is not None and time.perf_counter() - start > time_budget
        ):
            stats.wall_time += time.perf_counter() - start
            return PlanResult(Outcome.EXHAUSTED, stats=stats)
        for ai, a in enumerate(actions):
            if s & a.pre_mask != a.pre_mask:
                continue
            t = successor_bits(a, s)
            if t in parents:
                continue
            parents[t] = (s, ai)
            r = ff_heuristic(task, t)
            stats.evaluations += 1
            if r.h == INF:
                continue
            if r.h == 0:
                goal_bits = t
                break
            counter += 1
            heapq.heappush(heap, (r.h, counter, t))
    stats.wall_time += time.perf_counter() - start
    if goal_bits is None:
        return PlanResult(Outcome.IMPOSSIBLE, stats=stats)
    steps = []
    cur = goal_bits
    while parents[cur] is not None:
        prev, ai = parents[cur]
        steps.append(actions[ai])
        cur = prev
    steps.reverse()
    return PlanResult(Outcome.PLAN, _make_plan(task, steps), stats)


def plan(task: GroundTask, config: Optional[PlannerConfig] = None) -> PlanResult:
    """EHC first; on failure, greedy best-first from scratch."""
    config = config or PlannerConfig()
    stats = SearchStats()
    if eval_formula(task.goal, task.init.bits):
        stats.method = "trivial"
        return PlanResult(Outcome.PLAN, Plan([], 0.0), stats)
    if config.ehc_enabled:
        stats.method = "ehc"
        res = enforced_hill_climb(task, config.plateau_limit, stats)
        if res.outcome is not Outcome.EXHAUSTED:
            return res
    stats.method = "ehc+gbfs" if config.ehc_enabled else "gbfs"
    return greedy_best_first(task, config.node_budget, config.time_budget, stats)
