"""Relaxed planning graph and the FF heuristic."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..pddl.grounding import GroundTask

INF = float("inf")


def bit_indices(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


class RelaxedIndex:
    """Delete-relaxed operators of a task.

    Every ground action contributes one operator for its unconditional adds
    and one per conditional effect (precondition plus effect condition).
    """

    def __init__(self, task: GroundTask):
        n = len(task.fluents)
        self.n_fluents = n
        self.pre: list[tuple[int, ...]] = []
        self.adds: list[tuple[int, ...]] = []
        self.action_of: list[int] = []
        self.cost: list[float] = []
        for ai, a in enumerate(task.actions):
            self.pre.append(a.pre)
            self.adds.append(tuple(bit_indices(a.add)))
            self.action_of.append(ai)
            self.cost.append(a.cost)
            for ce in a.conditional:
                self.pre.append(tuple(sorted(set(a.pre) | set(ce.condition))))
                self.adds.append(tuple(bit_indices(ce.add)))
                self.action_of.append(ai)
                self.cost.append(a.cost)
        self.pre_count = [len(p) for p in self.pre]
        self.no_pre = [o for o, p in enumerate(self.pre) if not p]
        self.ops_by_pre: list[list[int]] = [[] for _ in range(n)]
        for o, p in enumerate(self.pre):
            for f in p:
                self.ops_by_pre[f].append(o)
        achievers: list[list[int]] = [[] for _ in range(n)]
        for o, adds in enumerate(self.adds):
            for f in adds:
                achievers[f].append(o)
        # cheaper achiever first, then lexicographic action order
        self.achievers = [sorted(ops, key=lambda o: (self.cost[o], self.action_of[o], o)) for ops in achievers]


def relaxed_index(task: GroundTask) -> RelaxedIndex:
    idx = getattr(task, "_relaxed_index", None)
    if idx is None:
        idx = RelaxedIndex(task)
        task._relaxed_index = idx
    return idx


def formula_level(formula: tuple, fact_level) -> float:
    tag = formula[0]
    if tag == "lit":
        return fact_level[formula[1]]
    if tag == "and":
        worst = 0
        for p in formula[1]:
            lv = formula_level(p, fact_level)
            if lv > worst:
                worst = lv
                if worst == INF:
                    return INF
        return worst
    if tag == "or":
        best = INF
        for p in formula[1]:
            lv = formula_level(p, fact_level)
            if lv < best:
                best = lv
                if best == 0:
                    return 0
        return best
    if tag == "true":
        return 0
    if tag == "false":
        return INF
    raise ValueError(f"uncompiled literal {formula!r} in relaxed goal")


def choose_subgoals(formula: tuple, fact_level, out: list) -> None:
    """Literals of the cheapest way to satisfy the formula (first minimum on ties)."""
    tag = formula[0]
    if tag == "lit":
        out.append(formula[1])
    elif tag == "and":
        for p in formula[1]:
            choose_subgoals(p, fact_level, out)
    elif tag == "or":
        best, best_lv = None, INF
        for p in formula[1]:
            lv = formula_level(p, fact_level)
            if lv < best_lv:
                best, best_lv = p, lv
        if best is not None:
            choose_subgoals(best, fact_level, out)


@dataclass
class RelaxedPlanningGraph:
    fact_layers: list[frozenset]
    action_layers: list[list[int]]
    fact_level: list[float]
    op_level: list[float]
    goal_level: float
    index: RelaxedIndex = field(repr=False)

    @property
    def reached_goal(self) -> bool:
        return self.goal_level < INF


@dataclass
class HeuristicResult:
    h: float
    relaxed_plan: list[tuple[int, int]]  # (layer, action index)
    helpful: list[int]

    @property
    def infinite(self) -> bool:
        return self.h == INF


def _expand(index: RelaxedIndex, bits: int, goal: tuple, stop_at_goal: bool = True):
    fact_level = [INF] * index.n_fluents
    op_level = [INF] * len(index.pre)
    counters = list(index.pre_count)
    ops_by_pre = index.ops_by_pre
    adds = index.adds
    current = bit_indices(bits)
    for f in current:
        fact_level[f] = 0
    ready = list(index.no_pre)
    for f in current:
        for o in ops_by_pre[f]:
            counters[o] -= 1
            if counters[o] == 0:
                ready.append(o)
    layers_facts = [current]
    layers_ops: list[list[int]] = []
    level = 0
    goal_lv = formula_level(goal, fact_level)
    while not (stop_at_goal and goal_lv < INF):
        if not ready:
            break
        new = []
        nxt = level + 1
        for o in ready:
            op_level[o] = level
            for f in adds[o]:
                if fact_level[f] == INF:
                    fact_level[f] = nxt
                    new.append(f)
        layers_ops.append(ready)
        if not new:
            break
        layers_facts.append(new)
        ready = []
        for f in new:
            for o in ops_by_pre[f]:
                counters[o] -= 1
                if counters[o] == 0:
                    ready.append(o)
        level = nxt
        goal_lv = formula_level(goal, fact_level)
    return fact_level, op_level, layers_facts, layers_ops, goal_lv


def build_rpg(task: GroundTask, bits: int, goal: Optional[tuple] = None, stop_at_goal: bool = True) -> RelaxedPlanningGraph:
    index = relaxed_index(task)
    goal = task.goal if goal is None else goal
    fact_level, op_level, layer_facts, layer_ops, goal_lv = _expand(index, bits, goal, stop_at_goal)
    cumulative = []
    acc: set[int] = set()
    for facts in layer_facts:
        acc |= set(facts)
        cumulative.append(frozenset(acc))
    actions = [sorted({index.action_of[o] for o in ops}) for ops in layer_ops]
    return RelaxedPlanningGraph(cumulative, actions, fact_level, op_level, goal_lv, index)


def ff_heuristic(task: GroundTask, bits: int, goal: Optional[tuple] = None) -> HeuristicResult:
    index = relaxed_index(task)
    goal = task.goal if goal is None else goal
    fact_level, op_level, _, _, goal_lv = _expand(index, bits, goal)
    if goal_lv == INF:
        return HeuristicResult(INF, [], [])
    if goal_lv == 0:
        return HeuristicResult(0, [], [])

    top: list[int] = []
    choose_subgoals(goal, fact_level, top)
    max_level = int(goal_lv)
    goals_at: list[set[int]] = [set() for _ in range(max_level + 1)]
    for g in top:
        goals_at[int(fact_level[g])].add(g)
    marked: list[set[int]] = [set() for _ in range(max_level + 1)]
    chosen: set[tuple[int, int]] = set()
    achievers = index.achievers
    pre = index.pre
    adds = index.adds
    action_of = index.action_of
    for i in range(max_level, 0, -1):
        for g in sorted(goals_at[i]):
            if g in marked[i]:
                continue
            op = None
            for o in achievers[g]:
                if op_level[o] == i - 1:
                    op = o
                    break
            assert op is not None, "fact level without an achiever"
            chosen.add((i - 1, action_of[op]))
            for p in pre[op]:
                lp = fact_level[p]
                if lp != 0 and p not in marked[i - 1]:
                    goals_at[int(lp)].add(p)
            for f in adds[op]:
                marked[i].add(f)
                marked[i - 1].add(f)

    helpful: set[int] = set()
    for g in goals_at[1]:
        for o in achievers[g]:
            if op_level[o] == 0:
                helpful.add(action_of[o])
    return HeuristicResult(len(chosen), sorted(chosen), sorted(helpful))
