"""Shared knowledge state: occupancy map, merged detections, receptacle flags."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..world.scene import OPENABLE_CLASSES, RECEPTACLE_CLASSES, Cell, access_pose
from ..world.sim import CLOSE, OPEN, PICKUP, PUT, Observation, PrimitiveAction

UNKNOWN, FREE, BLOCKED = 0, 1, 2
MERGE_IOU = 0.3
DECAY_RUNS = 3

Box = tuple[int, int, int, int]


def box_area(b: Box) -> int:
    return max(0, b[2] - b[0]) * max(0, b[3] - b[1])


def iou(a: Box, b: Box) -> float:
    inter = box_area((max(a[0], b[0]), max(a[1], b[1]), min(a[2], b[2]), min(a[3], b[3])))
    union = box_area(a) + box_area(b) - inter
    return inter / union if union else 0.0


def union_box(a: Box, b: Box) -> Box:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def box_cells(b: Box) -> list[Cell]:
    return [(x, y) for y in range(b[1], b[3]) for x in range(b[0], b[2])]


def box_center(b: Box) -> Cell:
    return ((b[0] + b[2] - 1) // 2, (b[1] + b[3] - 1) // 2)


@dataclass
class TrackedDetection:
    """A small object believed to exist."""

    tid: int
    cls: str
    box: Box
    support: int = 1
    containment: Optional[int] = None  # receptacle record id; None = floor
    last_seen: int = 0
    handles: Counter = field(default_factory=Counter)
    votes: Counter = field(default_factory=Counter)
    unseen_runs: int = 0

    @property
    def handle(self) -> str:
        return _top(self.handles)

    @property
    def anchor(self) -> Optional[Cell]:
        return _peak(self.votes)


@dataclass
class ReceptacleRecord:
    """A large receptacle believed to exist, plus what has been done to it."""

    rid: int
    cls: str
    box: Box
    support: int = 1
    openable: bool = False
    opened: bool = False
    checked: bool = False
    refuted: bool = False
    last_seen: int = 0
    handles: Counter = field(default_factory=Counter)
    votes: Counter = field(default_factory=Counter)

    @property
    def handle(self) -> str:
        return _top(self.handles)

    @property
    def anchor(self) -> Optional[Cell]:
        return _peak(self.votes)


def _peak(votes: Counter) -> Optional[Cell]:
    """Cell with the most box weight (ties: lexicographic)."""
    live = [(-n, c) for c, n in votes.items() if n > 0]
    return min(live)[1] if live else None


def _top(counter: Counter) -> str:
    if not counter:
        return ""
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass
class KnowledgeState:
    width: int
    height: int
    grid: np.ndarray = None
    objects: list[TrackedDetection] = field(default_factory=list)
    receptacles: list[ReceptacleRecord] = field(default_factory=list)
    agent: Cell = (0, 0)
    heading: int = 0
    held: Optional[int] = None  # tid of the held object
    hier_steps: int = 0
    prim_steps: int = 0
    detector_runs: int = 0
    map_version: int = 0
    next_id: int = 0
    last_frame: int = -1
    subject_seen: bool = False
    subject_picked: bool = False
    _dist_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.grid is None:
            self.grid = np.zeros((self.height, self.width), dtype=np.int8)

    @classmethod
    def empty(cls, width: int, height: int, agent: Cell = (0, 0), heading: int = 0) -> "KnowledgeState":
        k = cls(width, height)
        k.agent, k.heading = tuple(agent), heading
        k._set(k.agent, FREE)
        return k

    # -- map ---------------------------------------------------------------

    def cell(self, c: Cell) -> int:
        if not (0 <= c[0] < self.width and 0 <= c[1] < self.height):
            return BLOCKED
        return int(self.grid[c[1], c[0]])

    def _set(self, c: Cell, value: int) -> bool:
        if not (0 <= c[0] < self.width and 0 <= c[1] < self.height):
            return False
        if self.grid[c[1], c[0]] == UNKNOWN:
            self.grid[c[1], c[0]] = value
            self.map_version += 1
            return True
        return False

    def known_cells(self) -> int:
        return int(np.count_nonzero(self.grid))

    def known_fraction(self) -> float:
        return self.known_cells() / float(self.width * self.height)

    def passable(self, c: Cell) -> bool:
        return self.cell(c) != BLOCKED

    # -- records -----------------------------------------------------------

    def receptacle(self, rid: int) -> ReceptacleRecord:
        for r in self.receptacles:
            if r.rid == rid:
                return r
        raise KeyError(rid)

    def obj(self, tid: int) -> TrackedDetection:
        for o in self.objects:
            if o.tid == tid:
                return o
        raise KeyError(tid)

    def live_receptacles(self) -> list[ReceptacleRecord]:
        return [r for r in self.receptacles if not r.refuted and r.anchor is not None]

    def colocated(self, rid: int) -> list[ReceptacleRecord]:
        """Live records sharing ``rid``'s anchor (duplicates of one physical receptacle)."""
        a = self.receptacle(rid).anchor
        return [r for r in self.live_receptacles() if r.anchor == a] or [self.receptacle(rid)]

    def representatives(self) -> list[ReceptacleRecord]:
        """One live record per anchor cell: the best supported, then the oldest."""
        best: dict = {}
        for r in self.live_receptacles():
            cur = best.get(r.anchor)
            if cur is None or (r.support, -r.rid) > (cur.support, -cur.rid):
                best[r.anchor] = r
        return sorted(best.values(), key=lambda r: r.rid)

    def objects_of(self, cls: str) -> list[TrackedDetection]:
        return [o for o in self.objects if o.cls == cls]

    def receptacle_access(self, r: ReceptacleRecord):
        if r.anchor is None:
            return None
        # a neighbour seen to be free beats one that is merely not known blocked
        return access_pose(r.anchor, lambda c: self.cell(c) == FREE) or access_pose(r.anchor, self.passable)

    def summary(self) -> dict:
        return {
            "known": self.known_cells(),
            "objects": len(self.objects),
            "receptacles": len(self.receptacles),
            "checked": sum(r.checked for r in self.receptacles),
        }


# -- updates -------------------------------------------------------------------


def update_map(k: KnowledgeState, obs: Observation) -> KnowledgeState:
    """Reveal visible cells; known cells are never downgraded."""
    freed = [c for c in obs.visible if k._set(c, BLOCKED if c in obs.blocked else FREE) and c not in obs.blocked]
    if freed:
        # a receptacle cannot stand on a cell seen to be free
        for r in k.receptacles:
            for c in freed:
                r.votes.pop(c, None)
    k.agent, k.heading = tuple(obs.agent), obs.heading
    return k


def _merge_into(records: list, cls: str, box: Box):
    best, best_iou = None, MERGE_IOU
    for r in sorted(records, key=lambda r: r.rid if hasattr(r, "rid") else r.tid):
        if r.cls != cls:
            continue
        v = iou(r.box, box)
        if v > best_iou:
            best, best_iou = r, v
    return best


def _box_votes(cells: list[Cell]) -> dict:
    # a tight box says more about where the entity is than a loose one
    w = 1.0 / len(cells)
    return {c: w for c in cells}


def _receptacle_cells(k: KnowledgeState, box: Box) -> list[Cell]:
    """Box cells that could hold a receptacle: not seen free, not on the outer wall."""
    return [c for c in box_cells(box)
            if 0 < c[0] < k.width - 1 and 0 < c[1] < k.height - 1 and k.cell(c) != FREE]


def _containment_for(k: KnowledgeState, o: TrackedDetection) -> Optional[int]:
    """Live receptacle whose anchor carries the most of the object's box weight."""
    best, best_w = None, 0.0
    for r in k.representatives():
        w = o.votes.get(r.anchor, 0.0)
        if w > best_w:
            best, best_w = r.rid, w
    return best


def merge_detections(k: KnowledgeState, obs: Observation) -> KnowledgeState:
    """Fold a detector frame into the tracked entities (IoU > 0.3, same class).

    A frame that was already merged is ignored, so merging is idempotent.
    """
    if obs.frame >= 0:
        if obs.frame <= k.last_frame:
            return k
        k.last_frame = obs.frame
    step = k.prim_steps
    seen_tids: set[int] = set()
    # receptacles first so object containment can refer to fresh records
    dets = sorted(obs.detections, key=lambda d: d.cls not in RECEPTACLE_CLASSES)
    for d in dets:
        if d.cls in RECEPTACLE_CLASSES:
            r = _merge_into(k.receptacles, d.cls, d.box)
            if r is None:
                r = ReceptacleRecord(k.next_id, d.cls, d.box, openable=d.cls in OPENABLE_CLASSES)
                k.next_id += 1
                k.receptacles.append(r)
            else:
                r.box = union_box(r.box, d.box)
                r.support += 1
            cells = _receptacle_cells(k, d.box)
            if cells:
                r.votes.update(_box_votes(cells))
            if d.entity_id:
                r.handles[d.entity_id] += 1
            r.last_seen = step
        else:
            o = _merge_into(k.objects, d.cls, d.box)
            if o is None:
                o = TrackedDetection(k.next_id, d.cls, d.box, containment=None)
                k.next_id += 1
                k.objects.append(o)
            else:
                o.box = union_box(o.box, d.box)
                o.support += 1
            o.votes.update(_box_votes(box_cells(d.box)))
            if o.tid != k.held:
                o.containment = _containment_for(k, o)
            if d.entity_id:
                o.handles[d.entity_id] += 1
            o.last_seen = step
            o.unseen_runs = 0
            seen_tids.add(o.tid)
    k.detector_runs += 1
    _decay(k, obs, seen_tids)
    return k


def _enclosed(k: KnowledgeState, o: TrackedDetection) -> bool:
    if o.tid == k.held:
        return True
    if o.containment is None:
        return False
    try:
        r = k.receptacle(o.containment)
    except KeyError:
        return False
    return r.openable and not r.opened


def _decay(k: KnowledgeState, obs: Observation, seen: set[int]) -> None:
    """Drop objects fully in view for several frames without being re-detected."""
    keep = []
    for o in k.objects:
        if o.tid not in seen and not _enclosed(k, o) and all(c in obs.visible for c in box_cells(o.box)):
            o.unseen_runs += 1
        if o.unseen_runs >= DECAY_RUNS:
            continue
        keep.append(o)
    k.objects = keep


def mark_arrival(k: KnowledgeState) -> None:
    """Standing at a receptacle's access pose checks it if its contents are in view."""
    pose = (k.agent, k.heading)
    for r in k.live_receptacles():
        if (not r.openable or r.opened) and k.receptacle_access(r) == pose:
            r.checked = True


def mark_interaction(k: KnowledgeState, action: PrimitiveAction, success: bool, record: Optional[int] = None,
                     tracked: Optional[int] = None) -> KnowledgeState:
    """Belief update after an Open/Close/Pickup/Put primitive.

    ``record``/``tracked`` name the receptacle record and tracked object the
    primitive was aimed at.
    """
    if not success:
        return k
    if action.kind == OPEN and record is not None:
        for r in k.colocated(record):
            r.opened = r.checked = r.openable = True
    elif action.kind == CLOSE and record is not None:
        for r in k.colocated(record):
            r.opened = False
    elif action.kind == PICKUP and tracked is not None:
        o = k.obj(tracked)
        o.containment = None
        k.held = tracked
    elif action.kind == PUT and k.held is not None:
        o = k.obj(k.held)
        o.containment = record
        k.held = None
    return k


def refute_receptacle(k: KnowledgeState, rid: int) -> None:
    """An interaction aimed at the record failed: its current anchor is wrong."""
    r = k.receptacle(rid)
    a = r.anchor
    if a is not None:
        r.votes[a] = 0
    if r.anchor is None:
        r.refuted = True


def drop_object(k: KnowledgeState, tid: int) -> None:
    k.objects = [o for o in k.objects if o.tid != tid]
    if k.held == tid:
        k.held = None
