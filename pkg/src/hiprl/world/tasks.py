"""Question and rearrangement task generators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .scene import OBJECT_CLASSES, Cell, Scene, can_contain, rng_stream

EXISTENCE = "IQA-Existence"
COUNTING = "IQA-Counting"
CONTAINMENT = "IQA-Containment"
PUT_IN = "VSP-PutIn"

IQA_KINDS = (EXISTENCE, COUNTING, CONTAINMENT)
TASK_KINDS = IQA_KINDS + (PUT_IN,)

Answer = Union[bool, int, None]


class NoValidTaskError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    id: str
    kind: str
    scene: str
    subject: str
    target: Optional[str] = None  # receptacle class for Containment / PutIn
    answer: Answer = None  # IQA ground truth
    start: tuple[Cell, int] = ((1, 1), 0)
    seed: int = 0
    oracle_length: Optional[int] = None
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def is_question(self) -> bool:
        return self.kind in IQA_KINDS

    def describe(self) -> str:
        if self.kind == EXISTENCE:
            return f"Is there a {self.subject} in the room?"
        if self.kind == COUNTING:
            return f"How many {self.subject} are there?"
        if self.kind == CONTAINMENT:
            return f"Is there a {self.subject} in the {self.target}?"
        return f"Put the {self.subject} in the {self.target}."


def class_count(scene: Scene, otype: str) -> int:
    return sum(o.otype == otype for o in scene.objects)


def containment_pairs(scene: Scene, placement: Optional[dict] = None) -> set[tuple[str, str]]:
    """(object class, receptacle class) pairs realised by the placement."""
    placement = placement if placement is not None else {o.id: o.receptacle for o in scene.objects}
    rtype = {r.id: r.rtype for r in scene.receptacles}
    otype = {o.id: o.otype for o in scene.objects}
    return {(otype[o], rtype[p]) for o, p in placement.items() if isinstance(p, str)}


def answer_for(scene: Scene, kind: str, subject: str, target: Optional[str] = None) -> Answer:
    if kind == EXISTENCE:
        return class_count(scene, subject) > 0
    if kind == COUNTING:
        return class_count(scene, subject)
    if kind == CONTAINMENT:
        return (subject, target) in containment_pairs(scene)
    return None


def vsp_goal_met(state, subject: str, target: str) -> bool:
    """Ground-truth test for 'put a <subject> in a <target>' on a WorldState."""
    scene = state.scene
    otype = {o.id: o.otype for o in scene.objects}
    rtype = {r.id: r.rtype for r in scene.receptacles}
    return any(isinstance(p, str) and otype[o] == subject and rtype[p] == target for o, p in state.containment)


def vsp_candidates(scene: Scene) -> list[tuple[str, str]]:
    """Solvable (object class, receptacle class) pairs not satisfied at the start."""
    present = sorted({o.otype for o in scene.objects})
    rtypes = sorted({r.rtype for r in scene.receptacles})
    occupied = {o.receptacle for o in scene.objects if o.receptacle is not None}
    done = containment_pairs(scene)
    out = []
    for c in present:
        for r in rtypes:
            if not can_contain(r, c) or (c, r) in done:
                continue
            if any(rec.rtype == r and rec.id not in occupied for rec in scene.receptacles):
                out.append((c, r))
    return out


def random_start(scene: Scene, rng) -> tuple[Cell, int]:
    floor = scene.floor_cells()
    cell = floor[int(rng.integers(len(floor)))]
    return (cell, int(rng.integers(4)))


def generate_task(scene: Scene, seed: int, kind: str, task_id: Optional[str] = None) -> TaskSpec:
    """One task of the given kind; deterministic in (scene, seed, kind)."""
    if kind not in TASK_KINDS:
        raise ValueError(f"unknown task kind {kind!r}")
    rng = rng_stream(seed, f"task:{scene.name}:{kind}")
    task_id = task_id or f"{scene.name or 'scene'}-{kind}-{seed}"
    start = random_start(scene, rng)
    present = sorted({o.otype for o in scene.objects})
    if kind == PUT_IN:
        pairs = vsp_candidates(scene)
        if not pairs:
            raise NoValidTaskError(f"scene {scene.name!r} admits no put-in task")
        c, r = pairs[int(rng.integers(len(pairs)))]
        return TaskSpec(task_id, kind, scene.name, c, r, None, start, seed)
    if kind == EXISTENCE:
        absent = [c for c in OBJECT_CLASSES if c not in present]
        want_yes = bool(rng.random() < 0.5)
        pool = present if (want_yes and present) or not absent else absent
        c = pool[int(rng.integers(len(pool)))]
        return TaskSpec(task_id, kind, scene.name, c, None, answer_for(scene, kind, c), start, seed)
    if kind == COUNTING:
        pool = list(OBJECT_CLASSES)
        c = pool[int(rng.integers(len(pool)))]
        return TaskSpec(task_id, kind, scene.name, c, None, answer_for(scene, kind, c), start, seed)
    # containment: balance yes/no over feasible (class, receptacle class) pairs
    rtypes = sorted({r.rtype for r in scene.receptacles})
    yes = sorted(containment_pairs(scene))
    no = [(c, r) for c in OBJECT_CLASSES for r in rtypes if can_contain(r, c) and (c, r) not in set(yes)]
    want_yes = bool(rng.random() < 0.5)
    pool = yes if (want_yes and yes) or not no else no
    if not pool:
        raise NoValidTaskError(f"scene {scene.name!r} admits no containment question")
    c, r = pool[int(rng.integers(len(pool)))]
    return TaskSpec(task_id, kind, scene.name, c, r, answer_for(scene, kind, c, r), start, seed)
