"""Shared plumbing for direct controllers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..knowledge.state import BLOCKED, KnowledgeState, mark_arrival, merge_detections, update_map
from ..world.sim import MOVE_AHEAD, Env, Observation, PrimitiveAction

SUCCESS = "success"
FAILURE = "failure"
BUDGET = "budget"


@dataclass
class ControllerResult:
    controller: str
    steps: int = 0
    termination: str = SUCCESS
    reason: str = ""
    answer: object = None
    delta: dict = field(default_factory=dict)
    replans: int = 0
    goals: list = field(default_factory=list)  # planner only: goal kinds pursued, in order

    @property
    def ok(self) -> bool:
        return self.termination == SUCCESS

    def to_dict(self) -> dict:
        return {
            "controller": self.controller,
            "steps": self.steps,
            "termination": self.termination,
            "reason": self.reason,
            "answer": self.answer,
            "delta": self.delta,
            "replans": self.replans,
            "goals": list(self.goals),
        }


def act(env: Env, k: KnowledgeState, action: PrimitiveAction) -> Observation:
    """One primitive, with the free-space map updated from the resulting view."""
    obs = env.step(action)
    k.prim_steps = env.steps
    if action.kind == MOVE_AHEAD and not obs.success:
        # bumped into something: the faced cell is not floor
        cell = env.state.facing_cell()
        if 0 <= cell[0] < k.width and 0 <= cell[1] < k.height and k.grid[cell[1], cell[0]] != BLOCKED:
            k.grid[cell[1], cell[0]] = BLOCKED
            k.map_version += 1
    update_map(k, obs)
    return obs


def look(env: Env, k: KnowledgeState, pitch: int = 0) -> Observation:
    """Run the detector once and fold the frame into the knowledge state."""
    obs = env.detect(pitch)
    update_map(k, obs)
    merge_detections(k, obs)
    return obs


def arrive(env: Env, k: KnowledgeState) -> Observation:
    obs = look(env, k, 0)
    mark_arrival(k)
    return obs


def delta(before: dict, after: dict) -> dict:
    return {key: after[key] - before[key] for key in after}


def finish(result: ControllerResult, env: Env, start_steps: int, before: dict, k: KnowledgeState) -> ControllerResult:
    result.steps = env.steps - start_steps
    result.delta = delta(before, k.summary())
    return result


def budget_left(env: Env, start: int, budget: Optional[int]) -> Optional[int]:
    return None if budget is None else budget - (env.steps - start)
