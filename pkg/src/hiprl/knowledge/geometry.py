"""Shortest paths over agent poses (cell, heading) on an occupancy grid.

Rotations cost 1, stepping into a free cell costs 1, stepping into an unknown
cell costs ``unknown_cost``; blocked cells are impassable.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..world.scene import HEADINGS, Cell
from ..world.sim import MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT

UNKNOWN, FREE, BLOCKED = 0, 1, 2
UNKNOWN_COST = 3.0

Pose = tuple[Cell, int]


class PoseGraph:
    def __init__(self, grid: np.ndarray, unknown_cost: float = UNKNOWN_COST):
        self.height, self.width = grid.shape
        self.grid = grid
        n = self.width * self.height * 4
        self.n = n
        ys, xs = np.mgrid[0 : self.height, 0 : self.width]
        xs, ys = xs.ravel(), ys.ravel()
        base = (ys * self.width + xs) * 4
        src, dst, w = [], [], []
        for h in range(4):
            # rotations
            src += [base + h, base + h]
            dst += [base + (h + 1) % 4, base + (h - 1) % 4]
            w += [np.ones(base.size), np.ones(base.size)]
            dx, dy = HEADINGS[h]
            nx, ny = xs + dx, ys + dy
            ok = (nx >= 0) & (nx < self.width) & (ny >= 0) & (ny < self.height)
            tgt = np.zeros(base.size, dtype=np.int8) + BLOCKED
            tgt[ok] = grid[ny[ok], nx[ok]]
            move = ok & (tgt != BLOCKED) & (grid[ys, xs] != BLOCKED)
            src.append(base[move] + h)
            dst.append((ny[move] * self.width + nx[move]) * 4 + h)
            w.append(np.where(tgt[move] == UNKNOWN, unknown_cost, 1.0))
        src = np.concatenate(src)
        dst = np.concatenate(dst)
        w = np.concatenate(w)
        self.matrix = csr_matrix((w, (src, dst)), shape=(n, n))

    def index(self, pose: Pose) -> int:
        (x, y), h = pose
        return (y * self.width + x) * 4 + h

    def pose(self, idx: int) -> Pose:
        cell, h = divmod(int(idx), 4)
        y, x = divmod(cell, self.width)
        return ((x, y), h)

    def distances(self, sources: Iterable[Pose], with_predecessors: bool = False):
        idx = [self.index(p) for p in sources]
        return dijkstra(self.matrix, directed=True, indices=idx, return_predecessors=with_predecessors)

    def path(self, start: Pose, goals: Iterable[Pose]) -> Optional[list[Pose]]:
        """Cheapest pose sequence from start to the nearest goal (ties: lowest pose index)."""
        dist, pred = self.distances([start], with_predecessors=True)
        dist, pred = dist[0], pred[0]
        best = None
        for g in goals:
            gi = self.index(g)
            if np.isfinite(dist[gi]) and (best is None or (dist[gi], gi) < (dist[best], best)):
                best = gi
        if best is None:
            return None
        out = [best]
        s = self.index(start)
        while out[-1] != s:
            out.append(int(pred[out[-1]]))
        return [self.pose(i) for i in reversed(out)]


def primitive_between(a: Pose, b: Pose) -> str:
    """The motion primitive that turns pose a into adjacent pose b."""
    if a[0] == b[0]:
        return ROTATE_RIGHT if b[1] == (a[1] + 1) % 4 else ROTATE_LEFT
    return MOVE_AHEAD


def cell_bfs_distance(passable, start: Pose, goals: set) -> Optional[int]:
    """Plain breadth-first pose search; an oracle for unit-cost paths."""
    from collections import deque

    seen = {start: 0}
    q = deque([start])
    while q:
        p = q.popleft()
        if p in goals:
            return seen[p]
        (x, y), h = p
        dx, dy = HEADINGS[h]
        nxt = [((x, y), (h + 1) % 4), ((x, y), (h - 1) % 4)]
        if passable((x + dx, y + dy)):
            nxt.append(((x + dx, y + dy), h))
        for n in nxt:
            if n not in seen:
                seen[n] = seen[p] + 1
                q.append(n)
    return None
