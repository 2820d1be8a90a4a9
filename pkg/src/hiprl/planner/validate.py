from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..pddl.grounding import GroundAction, GroundTask, PreconditionViolation, apply, holds


@dataclass
class ValidationReport:
    valid: bool
    cost: float
    failed_step: Optional[int] = None
    message: str = ""


def validate(task: GroundTask, actions: Sequence[GroundAction]) -> ValidationReport:
    """Simulate ``actions`` from the initial state and check the goal."""
    if hasattr(actions, "actions"):
        actions = actions.actions
    state = task.init
    for i, a in enumerate(actions):
        try:
            state = apply(task, state, a)
        except PreconditionViolation as err:
            return ValidationReport(False, state.cost, i, f"step {i}: {err}")
    if not holds(state, task.goal):
        return ValidationReport(False, state.cost, len(actions), "goal not satisfied after final step")
    return ValidationReport(True, state.cost)
