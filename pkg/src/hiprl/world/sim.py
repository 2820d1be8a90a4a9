"""Primitive-action semantics of the grid kitchen."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .detect import Detection, NoiseModel, NoiseRecord, detect
from .scene import HEADINGS, PITCH_RANGE, Cell, Scene

MOVE_AHEAD = "MoveAhead"
ROTATE_LEFT = "RotateLeft"
ROTATE_RIGHT = "RotateRight"
OPEN = "Open"
CLOSE = "Close"
PICKUP = "Pickup"
PUT = "Put"

MOTION_KINDS = (MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT)
TARGET_KINDS = (OPEN, CLOSE, PICKUP, PUT)


@dataclass(frozen=True)
class PrimitiveAction:
    kind: str
    target: Optional[str] = None

    def __post_init__(self):
        if self.kind in MOTION_KINDS:
            if self.target is not None:
                raise ValueError(f"{self.kind} takes no target")
        elif self.kind in TARGET_KINDS:
            if not isinstance(self.target, str):
                raise ValueError(f"{self.kind} needs a string target id, got {self.target!r}")
        else:
            raise ValueError(f"unknown primitive {self.kind!r}")

    def __str__(self) -> str:
        return self.kind if self.target is None else f"{self.kind}({self.target})"

    @classmethod
    def parse(cls, text: str) -> "PrimitiveAction":
        if "(" in text:
            kind, target = text[:-1].split("(", 1)
            return cls(kind, target)
        return cls(text)


Place = Union[str, Cell, None]  # receptacle id, floor cell, or None while held


@dataclass(frozen=True)
class WorldState:
    scene: Scene
    agent: Cell
    heading: int
    held: Optional[str] = None
    opened: frozenset = frozenset()
    containment: tuple[tuple[str, Place], ...] = ()
    pitch: int = 0
    steps: int = 0

    @classmethod
    def initial(cls, scene: Scene, agent: Cell, heading: int) -> "WorldState":
        placements = tuple(
            sorted((o.id, o.receptacle if o.receptacle is not None else tuple(o.cell)) for o in scene.objects)
        )
        return cls(scene, tuple(agent), heading, None, frozenset(), placements)

    def place_of(self, oid: str) -> Place:
        for o, place in self.containment:
            if o == oid:
                return place
        raise KeyError(oid)

    def contents(self, rid: str) -> list[str]:
        return [o for o, place in self.containment if place == rid]

    def facing_cell(self) -> Cell:
        dx, dy = HEADINGS[self.heading]
        return (self.agent[0] + dx, self.agent[1] + dy)

    def facing_receptacle(self):
        return self.scene.receptacle_at(self.facing_cell())

    def visible(self, pitch: Optional[int] = None) -> frozenset:
        return self.scene.visible_cells(self.agent, self.heading, PITCH_RANGE[self.pitch if pitch is None else pitch])

    def snapshot(self) -> dict:
        return {
            "agent": list(self.agent),
            "heading": self.heading,
            "held": self.held,
            "opened": sorted(self.opened),
            "containment": [[o, list(p) if isinstance(p, tuple) else p] for o, p in self.containment],
            "steps": self.steps,
        }


@dataclass
class Observation:
    agent: Cell
    heading: int
    visible: frozenset
    detections: tuple[Detection, ...] = ()
    success: bool = True
    noise: NoiseRecord = field(default_factory=NoiseRecord)
    # visible cells that are not floor (depth-sensor stand-in for the free-space map)
    blocked: frozenset = frozenset()
    frame: int = -1  # detector frame index within the episode; -1 for plain steps

    def digest_fields(self) -> dict:
        return {
            "agent": list(self.agent),
            "heading": self.heading,
            "success": self.success,
            "visible": sorted([list(c) for c in self.visible]),
            "blocked": sorted([list(c) for c in self.blocked]),
            "detections": [d.to_list() for d in self.detections],
        }

    def compact(self) -> dict:
        """Short log form: pose, success, detections and a digest of the full observation."""
        full = json.dumps(self.digest_fields(), sort_keys=True, separators=(",", ":"))
        out = {"pose": [self.agent[0], self.agent[1], self.heading], "ok": self.success}
        if self.detections:
            out["dets"] = [d.to_list() for d in self.detections]
        out["digest"] = hashlib.sha1(full.encode()).hexdigest()[:16]
        return out


def _set_containment(state: WorldState, oid: str, place: Place) -> tuple:
    return tuple(sorted(((o, place if o == oid else p) for o, p in state.containment), key=lambda x: x[0]))


def transition(state: WorldState, action: PrimitiveAction) -> tuple[WorldState, bool]:
    """Physical effect of one primitive; illegal actions fail softly."""
    scene = state.scene
    kind = action.kind
    ok = False
    new = state
    if kind == MOVE_AHEAD:
        target = state.facing_cell()
        if not scene.blocked(target):
            new = replace(state, agent=target)
            ok = True
    elif kind == ROTATE_LEFT:
        new, ok = replace(state, heading=(state.heading - 1) % 4), True
    elif kind == ROTATE_RIGHT:
        new, ok = replace(state, heading=(state.heading + 1) % 4), True
    else:
        faced = state.facing_receptacle()
        if kind == OPEN:
            if faced is not None and faced.id == action.target and faced.openable and faced.id not in state.opened:
                new, ok = replace(state, opened=state.opened | {faced.id}), True
        elif kind == CLOSE:
            if faced is not None and faced.id == action.target and faced.openable and faced.id in state.opened:
                new, ok = replace(state, opened=state.opened - {faced.id}), True
        elif kind == PICKUP:
            ok = _can_pickup(state, action.target)
            if ok:
                new = replace(state, held=action.target, containment=_set_containment(state, action.target, None))
        elif kind == PUT:
            if (
                state.held is not None
                and faced is not None
                and faced.id == action.target
                and (not faced.openable or faced.id in state.opened)
                and len(state.contents(faced.id)) < faced.capacity
            ):
                new = replace(state, held=None, containment=_set_containment(state, state.held, faced.id))
                ok = True
    return replace(new, steps=state.steps + 1), ok


def _can_pickup(state: WorldState, oid: str) -> bool:
    if state.held is not None:
        return False
    try:
        place = state.place_of(oid)
    except KeyError:
        return False
    if place is None:
        return False
    if isinstance(place, str):
        faced = state.facing_receptacle()
        return faced is not None and faced.id == place and (not faced.openable or place in state.opened)
    return place in (state.agent, state.facing_cell())


def step(
    state: WorldState,
    action: PrimitiveAction,
    noise: Optional[NoiseModel] = None,
    rng: Optional[np.random.Generator] = None,
    run_detector: bool = False,
) -> tuple[WorldState, Observation]:
    """Advance one primitive; the observation is taken after the transition."""
    if not isinstance(action, PrimitiveAction):
        raise TypeError(f"not a primitive action: {action!r}")
    new, ok = transition(state, action)
    if run_detector:
        dets, visible = detect(new, noise or NoiseModel.gt(), rng, new.pitch)
    else:
        dets, visible = (), new.visible()
    return new, Observation(new.agent, new.heading, visible, tuple(dets), ok, blocked=_blocked(new.scene, visible))


def _blocked(scene: Scene, visible: frozenset) -> frozenset:
    return frozenset(c for c in visible if scene.blocked(c))


class Env:
    """Owns one episode's WorldState plus its detector stream.

    Controllers act only through ``step`` (costs one primitive) and
    ``detect`` (free; runs the detector at a given camera pitch).
    """

    def __init__(self, scene: Scene, agent: Cell, heading: int, noise: NoiseModel, detector_rng: np.random.Generator):
        self.state = WorldState.initial(scene, agent, heading)
        self.noise = noise
        self.rng = detector_rng
        self.log: list[dict] = []
        self.detector_calls = 0
        self.listeners: list = []

    @property
    def scene(self) -> Scene:
        return self.state.scene

    @property
    def steps(self) -> int:
        return self.state.steps

    def observe(self) -> Observation:
        visible = self.state.visible()
        return Observation(self.state.agent, self.state.heading, visible, blocked=_blocked(self.scene, visible))

    def step(self, action: PrimitiveAction) -> Observation:
        self.state, obs = step(self.state, action)
        entry = {"t": "prim", "a": str(action), "obs": obs.compact()}
        self.log.append(entry)
        for fn in self.listeners:
            fn(entry)
        return obs

    def detect(self, pitch: int = 0) -> Observation:
        record = NoiseRecord()
        dets, visible = detect(self.state, self.noise, self.rng, pitch, record)
        obs = Observation(self.state.agent, self.state.heading, visible, tuple(dets), True, record,
                          _blocked(self.scene, visible), frame=self.detector_calls)
        self.detector_calls += 1
        entry = {"t": "det", "pitch": pitch, "obs": obs.compact()}
        self.log.append(entry)
        for fn in self.listeners:
            fn(entry)
        return obs

    def set_pitch(self, pitch: int) -> None:
        self.state = replace(self.state, pitch=pitch)

    def faced_receptacle_id(self) -> str:
        """Interaction handle of whatever receptacle fills the view centre ('' if none)."""
        r = self.state.facing_receptacle()
        return r.id if r is not None else ""
