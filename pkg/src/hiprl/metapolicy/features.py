"""Symbolic summaries of the knowledge state fed to the meta-controller."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..controllers.stopper import answer_question
from ..knowledge.state import KnowledgeState
from ..world.scene import OBJECT_CLASSES, can_contain
from ..world.tasks import CONTAINMENT, COUNTING, EXISTENCE, PUT_IN, TASK_KINDS, TaskSpec

META_ACTIONS = ("Planner", "Explorer", "Scanner", "Stopper")
PRIM_BUDGET = 1000
HIER_CAP = 50

FEATURE_NAMES: tuple[str, ...] = (
    ("bias",)
    + tuple(f"kind:{k}" for k in TASK_KINDS)
    + tuple(f"subject:{c}" for c in OBJECT_CLASSES)
    + (
        "checked_fraction",
        "subject_found",
        "target_known",
        "holding_subject",
        "goal_believed",
        "map_known",
        "prim_steps",
        "hier_steps",
    )
    + tuple(f"last:{a}" for a in META_ACTIONS)
    + ("last_success",)
)
FEATURE_DIM = len(FEATURE_NAMES)


def schema_hash() -> str:
    """Identifies the feature layout; checkpoints carry it."""
    text = "|".join(FEATURE_NAMES + META_ACTIONS) + f"|{PRIM_BUDGET}|{HIER_CAP}"
    return hashlib.sha1(text.encode()).hexdigest()[:16]


@dataclass
class History:
    last: Optional[str] = None
    last_success: bool = False
    hier_steps: int = 0
    prim_steps: int = 0
    last_termination: str = ""


def candidate_receptacles(k: KnowledgeState, cls: str) -> list:
    return [r for r in k.representatives() if can_contain(r.cls, cls)]


def _checked(k: KnowledgeState, r) -> bool:
    return any(x.checked for x in k.colocated(r.rid))


def subject_in_target(k: KnowledgeState, subject: str, target: Optional[str]) -> bool:
    live = {r.rid: r.cls for r in k.live_receptacles()}
    return any(live.get(o.containment) == target for o in k.objects_of(subject) if o.tid != k.held)


def goal_believed(k: KnowledgeState, task: TaskSpec) -> bool:
    """Whether the tracked knowledge already settles the task."""
    cands = candidate_receptacles(k, task.subject)
    all_checked = all(_checked(k, r) for r in cands)
    if task.kind == PUT_IN:
        return subject_in_target(k, task.subject, task.target)
    if task.kind == EXISTENCE:
        return bool(k.objects_of(task.subject)) or all_checked
    if task.kind == COUNTING:
        return all_checked
    if task.kind == CONTAINMENT:
        return bool(answer_question(k, task)) or all(_checked(k, r) for r in cands if r.cls == task.target)
    return False


def featurize(k: KnowledgeState, task: TaskSpec, history: History) -> np.ndarray:
    f = np.zeros(FEATURE_DIM)
    f[0] = 1.0
    f[1 + TASK_KINDS.index(task.kind)] = 1.0
    if task.subject in OBJECT_CLASSES:
        f[1 + len(TASK_KINDS) + OBJECT_CLASSES.index(task.subject)] = 1.0
    i = 1 + len(TASK_KINDS) + len(OBJECT_CLASSES)
    cands = candidate_receptacles(k, task.subject)
    f[i] = sum(_checked(k, r) for r in cands) / len(cands) if cands else 0.0
    f[i + 1] = float(bool(k.objects_of(task.subject)))
    f[i + 2] = float(task.target is not None and any(r.cls == task.target for r in k.live_receptacles()))
    held = k.obj(k.held) if k.held is not None and any(o.tid == k.held for o in k.objects) else None
    f[i + 3] = float(held is not None and held.cls == task.subject)
    f[i + 4] = float(goal_believed(k, task))
    f[i + 5] = k.known_fraction()
    f[i + 6] = min(history.prim_steps / PRIM_BUDGET, 1.0)
    f[i + 7] = min(history.hier_steps / HIER_CAP, 1.0)
    if history.last is not None:
        f[i + 8 + META_ACTIONS.index(history.last)] = 1.0
    f[-1] = float(history.last_success)
    return f


def digest(f: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(f, dtype="<f8").tobytes()).hexdigest()[:16]
