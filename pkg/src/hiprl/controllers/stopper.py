"""Rule-based Stopper: ends the episode and answers from tracked knowledge."""

from __future__ import annotations

from ..knowledge.state import KnowledgeState
from ..world.tasks import CONTAINMENT, COUNTING, EXISTENCE, TaskSpec
from .base import SUCCESS, ControllerResult


def answer_question(k: KnowledgeState, task: TaskSpec):
    if task.kind == EXISTENCE:
        return bool(k.objects_of(task.subject))
    if task.kind == COUNTING:
        return len(k.objects_of(task.subject))
    if task.kind == CONTAINMENT:
        for o in k.objects_of(task.subject):
            if o.containment is None:
                continue
            try:
                if k.receptacle(o.containment).cls == task.target:
                    return True
            except KeyError:
                continue
        return False
    return None


def stop_and_answer(k: KnowledgeState, task: TaskSpec) -> ControllerResult:
    return ControllerResult("Stopper", 0, SUCCESS, "", answer_question(k, task), {})
