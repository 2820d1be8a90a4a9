"""Kitchen scenes on a 4-connected grid."""

from __future__ import annotations

import zlib
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

OBJECT_CLASSES = (
    "Mug", "Bowl", "Apple", "Bread", "Fork", "Knife", "Spoon",
    "Potato", "Tomato", "Egg", "Plate", "Cup", "Lettuce",
)
RECEPTACLE_CLASSES = ("Fridge", "Microwave", "Cabinet", "Drawer", "Sink", "GarbageCan")
OPENABLE_CLASSES = frozenset({"Fridge", "Microwave", "Cabinet", "Drawer"})

_FOOD = ("Apple", "Bread", "Potato", "Tomato", "Egg", "Lettuce")
_DISHES = ("Mug", "Bowl", "Plate", "Cup")
_CUTLERY = ("Fork", "Knife", "Spoon")

# which object classes fit which receptacle classes
CAN_CONTAIN: dict[str, tuple[str, ...]] = {
    "Fridge": _FOOD + ("Mug", "Bowl", "Plate", "Cup"),
    "Microwave": ("Mug", "Bowl", "Cup", "Plate", "Potato", "Egg", "Bread", "Apple", "Tomato"),
    "Cabinet": _DISHES + ("Bread", "Potato"),
    "Drawer": _CUTLERY + ("Cup", "Plate", "Bowl"),
    "Sink": _DISHES + _CUTLERY + ("Apple", "Potato", "Tomato", "Lettuce", "Egg"),
    "GarbageCan": _FOOD,
}

HEADINGS = ((0, -1), (1, 0), (0, 1), (-1, 0))  # N, E, S, W
HEADING_NAMES = "NESW"

# camera pitch (degrees) -> detection range in cells
PITCH_RANGE = {-30: 2, 0: 5, 30: 8}

Cell = tuple[int, int]


def can_contain(rtype: str, otype: str) -> bool:
    return otype in CAN_CONTAIN.get(rtype, ())


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one consumer, split from a master seed by label."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(label.encode())]))


@dataclass(frozen=True)
class Receptacle:
    id: str
    rtype: str
    cell: Cell
    openable: bool
    capacity: int = 1


@dataclass(frozen=True)
class SmallObject:
    id: str
    otype: str
    receptacle: Optional[str] = None
    cell: Optional[Cell] = None  # floor placement when receptacle is None


@dataclass(frozen=True)
class SceneConfig:
    width: int = 12
    height: int = 10
    partitions: int = 1
    receptacle_counts: tuple[tuple[str, int], ...] = (
        ("Fridge", 1), ("Microwave", 1), ("Cabinet", 3), ("Drawer", 3), ("Sink", 1), ("GarbageCan", 1),
    )
    n_objects: int = 6
    floor_objects: int = 0
    max_retries: int = 50


class InfeasibleSceneError(ValueError):
    pass


@dataclass(frozen=True)
class Scene:
    width: int
    height: int
    walls: frozenset
    receptacles: tuple[Receptacle, ...]
    objects: tuple[SmallObject, ...]
    seed: int = 0
    split: str = "train"
    name: str = ""
    _rec_by_cell: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_rec_by_cell", {r.cell: r for r in self.receptacles})

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_wall(self, cell: Cell) -> bool:
        return cell in self.walls or not self.in_bounds(cell)

    def receptacle_at(self, cell: Cell) -> Optional[Receptacle]:
        return self._rec_by_cell.get(cell)

    def blocked(self, cell: Cell) -> bool:
        return self.is_wall(cell) or cell in self._rec_by_cell

    def floor_cells(self) -> list[Cell]:
        return [(x, y) for y in range(self.height) for x in range(self.width) if not self.blocked((x, y))]

    def receptacle(self, rid: str) -> Receptacle:
        for r in self.receptacles:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def obj(self, oid: str) -> SmallObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def visible_cells(self, cell: Cell, heading: int, view_range: int) -> frozenset:
        return _visible_cells(self.width, self.height, self.walls, tuple(sorted(self._rec_by_cell)), cell, heading, view_range)

    def ascii(self, agent: Optional[tuple[Cell, int]] = None) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                c = (x, y)
                if agent is not None and agent[0] == c:
                    row.append("^>v<"[agent[1]])
                elif c in self.walls:
                    row.append("#")
                elif c in self._rec_by_cell:
                    row.append(self._rec_by_cell[c].rtype[0])
                else:
                    row.append(".")
            rows.append("".join(row))
        return "\n".join(rows)


def frustum_cells(cell: Cell, heading: int, view_range: int) -> list[Cell]:
    """Cells in the 90-degree view wedge of the given depth, nearest first."""
    hx, hy = HEADINGS[heading]
    lx, ly = -hy, hx
    out = []
    for f in range(1, view_range + 1):
        for lat in range(-f, f + 1):
            out.append((cell[0] + hx * f + lx * lat, cell[1] + hy * f + ly * lat))
    return out


def _line_cells(a: Cell, b: Cell) -> list[Cell]:
    """Cells strictly between a and b crossed by the centre-to-centre segment."""
    return [(a[0] + ox, a[1] + oy) for ox, oy in _line_offsets(b[0] - a[0], b[1] - a[1])]


@lru_cache(maxsize=None)
def _line_offsets(dx: int, dy: int) -> tuple[Cell, ...]:
    n = 4 * max(abs(dx), abs(dy))
    seen: list[Cell] = []
    for i in range(1, n):
        t = i / n
        # nudge off exact cell borders so grazing corners resolve deterministically
        px = 0.5 + dx * t + 1e-9
        py = 0.5 + dy * t + 1e-9
        c = (int(np.floor(px)), int(np.floor(py)))
        if c != (0, 0) and c != (dx, dy) and (not seen or seen[-1] != c):
            seen.append(c)
    return tuple(seen)


def access_pose(anchor: Cell, passable) -> Optional[tuple[Cell, int]]:
    """Standing cell and heading from which ``anchor`` is faced.

    Picks the first passable 4-neighbour in lexicographic cell order.
    """
    options = []
    for h, (dx, dy) in enumerate(HEADINGS):
        c = (anchor[0] - dx, anchor[1] - dy)
        if passable(c):
            options.append((c, h))
    return min(options) if options else None


@lru_cache(maxsize=200_000)
def _visible_cells(width, height, walls, rec_cells, cell, heading, view_range) -> frozenset:
    blocking = walls | frozenset(rec_cells)
    out = {cell}
    for c in frustum_cells(cell, heading, view_range):
        if not (0 <= c[0] < width and 0 <= c[1] < height):
            continue
        if any(m in blocking for m in _line_cells(cell, c)):
            continue
        out.add(c)
    return frozenset(out)


def _neighbors(cell: Cell) -> list[Cell]:
    return [(cell[0] + dx, cell[1] + dy) for dx, dy in HEADINGS]


def _connected(width: int, height: int, blocked: set) -> bool:
    floor = [(x, y) for y in range(height) for x in range(width) if (x, y) not in blocked]
    if not floor:
        return False
    seen = {floor[0]}
    queue = deque([floor[0]])
    while queue:
        c = queue.popleft()
        for n in _neighbors(c):
            if 0 <= n[0] < width and 0 <= n[1] < height and n not in blocked and n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == len(floor)


def _walls(config: SceneConfig, rng: np.random.Generator) -> set:
    w, h = config.width, config.height
    walls = {(x, y) for x in range(w) for y in range(h) if x in (0, w - 1) or y in (0, h - 1)}
    used_cols: set[int] = set()
    for _ in range(config.partitions):
        choices = [x for x in range(4, w - 4) if not used_cols & {x - 1, x, x + 1}]
        if not choices:
            break
        col = int(rng.choice(choices))
        used_cols.add(col)
        door = int(rng.integers(1, h - 2))
        for y in range(1, h - 1):
            if y not in (door, door + 1):
                walls.add((col, y))
    return walls


def generate_scene(seed: int, config: Optional[SceneConfig] = None, split: str = "train", name: str = "") -> Scene:
    """Random connected kitchen; deterministic in ``seed``."""
    config = config or SceneConfig()
    rng = rng_stream(seed, "scene")
    counts = dict(config.receptacle_counts)
    n_rec = sum(counts.values())
    interior = (config.width - 2) * (config.height - 2)
    if n_rec + config.floor_objects + 2 > interior // 2:
        raise InfeasibleSceneError(f"{n_rec} receptacles do not fit a {config.width}x{config.height} grid")
    for _ in range(config.max_retries):
        scene = _try_scene(seed, config, rng, split, name)
        if scene is not None:
            return scene
    raise InfeasibleSceneError(f"no feasible scene after {config.max_retries} attempts (seed {seed})")


def _try_scene(seed, config, rng, split, name) -> Optional[Scene]:
    walls = _walls(config, rng)
    blocked = set(walls)
    receptacles: list[Receptacle] = []
    for rtype, count in config.receptacle_counts:
        for i in range(count):
            candidates = [
                (x, y)
                for y in range(1, config.height - 1)
                for x in range(1, config.width - 1)
                if (x, y) not in blocked and any(n in walls for n in _neighbors((x, y)))
            ]
            rng.shuffle(candidates)
            placed = False
            for c in candidates:
                trial = blocked | {c}
                if not _connected(config.width, config.height, trial):
                    continue
                # every receptacle keeps a free neighbour
                if any(all(n in trial for n in _neighbors(r.cell)) for r in receptacles):
                    continue
                if all(n in trial for n in _neighbors(c)):
                    continue
                receptacles.append(Receptacle(f"{rtype}_{i}", rtype, c, rtype in OPENABLE_CLASSES))
                blocked = trial
                placed = True
                break
            if not placed:
                return None
    occupancy = {r.id: 0 for r in receptacles}
    objects: list[SmallObject] = []
    per_class: dict[str, int] = {}
    for _ in range(config.n_objects):
        otype = OBJECT_CLASSES[int(rng.integers(len(OBJECT_CLASSES)))]
        slots = [r for r in receptacles if can_contain(r.rtype, otype) and occupancy[r.id] < r.capacity]
        if not slots:
            return None
        r = slots[int(rng.integers(len(slots)))]
        occupancy[r.id] += 1
        k = per_class.get(otype, 0)
        per_class[otype] = k + 1
        objects.append(SmallObject(f"{otype}_{k}", otype, receptacle=r.id))
    floor = [(x, y) for y in range(config.height) for x in range(config.width) if (x, y) not in blocked]
    for _ in range(config.floor_objects):
        otype = OBJECT_CLASSES[int(rng.integers(len(OBJECT_CLASSES)))]
        c = floor[int(rng.integers(len(floor)))]
        k = per_class.get(otype, 0)
        per_class[otype] = k + 1
        objects.append(SmallObject(f"{otype}_{k}", otype, cell=c))
    return Scene(config.width, config.height, frozenset(walls), tuple(receptacles), tuple(objects), seed, split, name)
