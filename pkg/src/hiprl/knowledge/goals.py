"""Goal encoders for questions and put-in tasks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from ..pddl.syntax import And, Atom, Exists, Forall, Not, Or, Param
from ..world.tasks import CONTAINMENT, COUNTING, EXISTENCE, IQA_KINDS, PUT_IN, TaskSpec

IQA_CHECK = "IQA-Check"
VSP_PUT_IN = "VSP-PutIn"


def type_name(cls: str) -> str:
    return cls + "Type"


@dataclass(frozen=True)
class GoalSpec:
    kind: str  # IQA-Check or VSP-PutIn
    subject: str
    target: Optional[str]
    formula: object
    task_kind: str = ""


def _closed_all():
    return Forall((Param("?re", "receptacle"),), Not(Atom("opened", ("?re",))))


@lru_cache(maxsize=None)
def found_or_checked(cls: str):
    """Subject seen anywhere, or every receptacle that could hold it checked and all closed."""
    t = type_name(cls)
    return Or(
        (
            Exists((Param("?o", "object"),), Atom("objectType", ("?o", t))),
            all_checked(cls),
        )
    )


@lru_cache(maxsize=None)
def all_checked(cls: str):
    t = type_name(cls)
    return And(
        (
            Forall(
                (Param("?t", "rtype"),),
                Forall(
                    (Param("?r", "receptacle"),),
                    Or(
                        (
                            Not(And((Atom("canContain", ("?t", t)), Atom("receptacleType", ("?r", "?t"))))),
                            Atom("checked", ("?r",)),
                        )
                    ),
                ),
            ),
            _closed_all(),
        )
    )


@lru_cache(maxsize=None)
def _in_some(cls: str, rcls: str):
    return Exists(
        (Param("?o", "object"),),
        Exists(
            (Param("?r", "receptacle"),),
            And(
                (
                    Atom("objectType", ("?o", type_name(cls))),
                    Atom("receptacleType", ("?r", type_name(rcls))),
                    Atom("inReceptacle", ("?o", "?r")),
                )
            ),
        ),
    )


@lru_cache(maxsize=None)
def _containment(cls: str, rcls: str):
    checked = Forall(
        (Param("?r", "receptacle"),),
        Or((Not(Atom("receptacleType", ("?r", type_name(rcls)))), Atom("checked", ("?r",)))),
    )
    return Or((_in_some(cls, rcls), And((checked, _closed_all()))))


@lru_cache(maxsize=None)
def vsp_search(cls: str, rcls: str):
    """Before the subject is tracked: search for it, provided a target is known."""
    known_target = Exists((Param("?r", "receptacle"),), Atom("receptacleType", ("?r", type_name(rcls))))
    return And((found_or_checked(cls), known_target))


def goal_for_question(task: TaskSpec) -> GoalSpec:
    if task.kind not in IQA_KINDS:
        raise ValueError(f"{task.kind} is not a question")
    if task.kind == EXISTENCE:
        f = found_or_checked(task.subject)
    elif task.kind == COUNTING:
        f = all_checked(task.subject)
    else:
        f = _containment(task.subject, task.target)
    return GoalSpec(IQA_CHECK, task.subject, task.target, f, task.kind)


def goal_for_vsp(task: TaskSpec) -> GoalSpec:
    if task.kind != PUT_IN:
        raise ValueError(f"{task.kind} is not a put-in task")
    return GoalSpec(VSP_PUT_IN, task.subject, task.target, _in_some(task.subject, task.target), task.kind)


def search_goal_for_vsp(task: TaskSpec) -> GoalSpec:
    return GoalSpec(IQA_CHECK, task.subject, task.target, vsp_search(task.subject, task.target), task.kind)


def goal_for_task(task: TaskSpec) -> GoalSpec:
    return goal_for_vsp(task) if task.kind == PUT_IN else goal_for_question(task)


def goal_for_containment_check(cls: str, rcls: str) -> GoalSpec:
    return GoalSpec(IQA_CHECK, cls, rcls, _containment(cls, rcls), CONTAINMENT)
