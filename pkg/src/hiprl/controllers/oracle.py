"""Shortest-path estimate: the planner loop given every receptacle position up front."""

from __future__ import annotations

from collections import Counter

from ..knowledge.state import BLOCKED, FREE, KnowledgeState, ReceptacleRecord
from ..world.detect import NoiseModel
from ..world.scene import Scene, rng_stream
from ..world.sim import Env
from ..world.tasks import TaskSpec
from .base import look
from .planner import PlannerControllerConfig, goal_function, run_planner_controller

ORACLE_BUDGET = 1000


def seeded_knowledge(scene: Scene, agent, heading) -> KnowledgeState:
    """Full map and every receptacle; small objects still have to be seen."""
    k = KnowledgeState.empty(scene.width, scene.height, agent, heading)
    for y in range(scene.height):
        for x in range(scene.width):
            k.grid[y, x] = BLOCKED if scene.blocked((x, y)) else FREE
    k.map_version += 1
    for r in scene.receptacles:
        box = (r.cell[0], r.cell[1], r.cell[0] + 1, r.cell[1] + 1)
        rec = ReceptacleRecord(k.next_id, r.rtype, box, openable=r.openable)
        rec.handles = Counter({r.id: 1})
        rec.votes = Counter({r.cell: 1})
        k.next_id += 1
        k.receptacles.append(rec)
    return k


def oracle_run(scene: Scene, task: TaskSpec, budget: int = ORACLE_BUDGET):
    env = Env(scene, task.start[0], task.start[1], NoiseModel.gt(), rng_stream(task.seed, "oracle-detector"))
    k = seeded_knowledge(scene, task.start[0], task.start[1])
    look(env, k, 0)  # the same free first look an episode starts with
    result = run_planner_controller(env, k, goal_function(task), config=PlannerControllerConfig(budget=budget))
    return env, k, result


def oracle_length(scene: Scene, task: TaskSpec, budget: int = ORACLE_BUDGET) -> int:
    env, _, _ = oracle_run(scene, task, budget)
    return env.steps
