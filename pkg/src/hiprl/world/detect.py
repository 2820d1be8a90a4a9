"""Detection oracle with a configurable noise model.

Stands in for a learned detector: exact visible entities are computed by ray
casting, then dropped, relabelled and jittered according to NoiseModel.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .scene import OBJECT_CLASSES, PITCH_RANGE, RECEPTACLE_CLASSES

Box = tuple[int, int, int, int]  # x0, y0, x1, y1 (half-open, cells)


@dataclass(frozen=True)
class NoiseModel:
    miss: float = 0.2
    false_positive: float = 0.05
    confusion: float = 0.05
    jitter: int = 1
    # extra per-frame miss for receptacles in scenes the detector was not tuned on
    unseen_receptacle_miss: float = 0.2
    ground_truth: bool = False

    @classmethod
    def gt(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0, 0.0, True)

    @classmethod
    def named(cls, name: str) -> "NoiseModel":
        if name == "gt":
            return cls.gt()
        if name == "default":
            return cls()
        raise ValueError(f"unknown noise mode {name!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Detection:
    cls: str
    box: Box
    entity_id: Optional[str]  # interaction handle; None for hallucinations
    det_id: int = 0

    def to_list(self) -> list:
        return [self.cls, list(self.box), self.entity_id, self.det_id]


@dataclass
class NoiseRecord:
    missed: list[str] = field(default_factory=list)
    confused: list[str] = field(default_factory=list)
    false_positives: int = 0


def cell_box(cell) -> Box:
    return (cell[0], cell[1], cell[0] + 1, cell[1] + 1)


def visible_entities(state, visible: frozenset) -> list[tuple[str, str, Box]]:
    """(kind, id, box) for every receptacle/object the camera could see."""
    scene = state.scene
    out = []
    for r in scene.receptacles:
        if r.cell in visible:
            out.append(("receptacle", r.id, cell_box(r.cell)))
    for oid, place in state.containment:
        if place is None:
            continue
        if isinstance(place, str):
            r = scene.receptacle(place)
            if r.cell in visible and (not r.openable or place in state.opened):
                out.append(("object", oid, cell_box(r.cell)))
        elif place in visible:
            out.append(("object", oid, cell_box(place)))
    return out


def _class_of(state, kind: str, eid: str) -> str:
    if kind == "receptacle":
        return state.scene.receptacle(eid).rtype
    return state.scene.obj(eid).otype


def _jitter(box: Box, radius: int, rng: np.random.Generator, width: int, height: int) -> Box:
    """Loosen each edge outward by 0..radius cells; the entity's own cell stays inside."""
    d = rng.integers(0, radius + 1, size=4)
    return (
        max(0, box[0] - int(d[0])),
        max(0, box[1] - int(d[1])),
        min(width, box[2] + int(d[2])),
        min(height, box[3] + int(d[3])),
    )


def detect(state, noise: NoiseModel, rng: Optional[np.random.Generator], pitch: int = 0, record: Optional[NoiseRecord] = None):
    """Detections for the agent's current view at the given camera pitch."""
    scene = state.scene
    visible = scene.visible_cells(state.agent, state.heading, PITCH_RANGE[pitch])
    entities = visible_entities(state, visible)
    record = record if record is not None else NoiseRecord()
    dets = []
    if noise.ground_truth:
        for kind, eid, box in entities:
            dets.append(Detection(_class_of(state, kind, eid), box, eid, len(dets)))
        return dets, visible
    assert rng is not None, "noisy detection needs an rng stream"
    unseen = scene.split == "unseen"
    for kind, eid, box in entities:
        p_miss = noise.miss
        if kind == "receptacle" and unseen:
            p_miss = min(1.0, p_miss + noise.unseen_receptacle_miss)
        if rng.random() < p_miss:
            record.missed.append(eid)
            continue
        cls = _class_of(state, kind, eid)
        if rng.random() < noise.confusion:
            pool = [c for c in (RECEPTACLE_CLASSES if kind == "receptacle" else OBJECT_CLASSES) if c != cls]
            cls = pool[int(rng.integers(len(pool)))]
            record.confused.append(eid)
        if noise.jitter:
            box = _jitter(box, noise.jitter, rng, scene.width, scene.height)
        dets.append(Detection(cls, box, eid, len(dets)))
    if rng.random() < noise.false_positive:
        floor = sorted(c for c in visible if not scene.blocked(c))
        if floor:
            c = floor[int(rng.integers(len(floor)))]
            cls = OBJECT_CLASSES[int(rng.integers(len(OBJECT_CLASSES)))]
            dets.append(Detection(cls, cell_box(c), None, len(dets)))
            record.false_positives += 1
    return dets, visible
