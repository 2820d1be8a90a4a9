"""Navigator, Explorer and Scanner."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..knowledge.geometry import Pose, primitive_between
from ..knowledge.problem import pose_distances, pose_graph
from ..knowledge.state import BLOCKED, UNKNOWN, KnowledgeState
from ..world.scene import HEADINGS, PITCH_RANGE, Cell, frustum_cells
from ..world.scene import _line_offsets
from ..world.sim import ROTATE_RIGHT, Env, PrimitiveAction
from .base import BUDGET, FAILURE, SUCCESS, ControllerResult, act, arrive, finish, look

NAV_BUDGET = 100
EXPLORE_LAMBDA = 0.5
SCAN_PITCHES = (-30, 0, 30)


def goal_poses(k: KnowledgeState, target: Cell, heading: Optional[int] = None) -> set[Pose]:
    if heading is not None:
        return {(tuple(target), heading)}
    if k.cell(target) == BLOCKED:
        # stand next to it, facing it
        return {((target[0] - dx, target[1] - dy), h) for h, (dx, dy) in enumerate(HEADINGS)}
    return {(tuple(target), h) for h in range(4)}


def navigate(env: Env, k: KnowledgeState, target: Cell, heading: Optional[int] = None, budget: int = NAV_BUDGET,
             detect_on_arrival: bool = True) -> ControllerResult:
    """Replan on the known map after every primitive until the target pose is reached."""
    start, before = env.steps, k.summary()
    res = ControllerResult("Navigator")
    if not (0 <= target[0] < k.width and 0 <= target[1] < k.height):
        res.termination, res.reason = FAILURE, "target outside grid"
        return finish(res, env, start, before, k)
    while True:
        here = (tuple(k.agent), k.heading)
        goals = goal_poses(k, target, heading)
        if here in goals:
            if detect_on_arrival:
                arrive(env, k)
            res.termination = SUCCESS
            break
        if env.steps - start >= budget:
            res.termination, res.reason = BUDGET, "navigation budget"
            break
        path = pose_graph(k).path(here, goals)
        if path is None:
            res.termination, res.reason = FAILURE, "unreachable"
            break
        act(env, k, PrimitiveAction(primitive_between(path[0], path[1])))
    return finish(res, env, start, before, k)


def novelty(k: KnowledgeState, pose: Pose, view_range: int = PITCH_RANGE[0]) -> int:
    """Unknown cells the camera would cover from ``pose``, looking through non-blocked cells."""
    (x, y), h = pose
    n = 0
    for c in frustum_cells((x, y), h, view_range):
        if not (0 <= c[0] < k.width and 0 <= c[1] < k.height) or k.grid[c[1], c[0]] != UNKNOWN:
            continue
        clear = True
        for ox, oy in _line_offsets(c[0] - x, c[1] - y):
            v = k.cell((x + ox, y + oy))
            if v == BLOCKED:
                clear = False
                break
        n += clear
    return n


def choose_view(k: KnowledgeState, lam: float = EXPLORE_LAMBDA) -> tuple[Optional[Pose], int, float]:
    """(pose, novelty, score) maximising novelty - lam * distance over known-free cells."""
    here = (tuple(k.agent), k.heading)
    g = pose_graph(k)
    dist = pose_distances(k, [here])[0]
    best, best_key = None, None
    ys, xs = np.nonzero(k.grid == 1)
    for x, y in sorted(zip(xs.tolist(), ys.tolist())):
        for h in range(4):
            pose = ((x, y), h)
            d = dist[g.index(pose)]
            if not np.isfinite(d):
                continue
            nov = novelty(k, pose)
            if nov == 0:
                continue
            key = (nov - lam * d, -d)
            if best_key is None or key > best_key:
                best, best_key = (pose, nov, key[0]), key
    if best is None:
        return None, 0, 0.0
    return best


def explore(env: Env, k: KnowledgeState, lam: float = EXPLORE_LAMBDA, budget: int = NAV_BUDGET) -> ControllerResult:
    start, before = env.steps, k.summary()
    pose, nov, score = choose_view(k, lam)
    if pose is None:
        res = ControllerResult("Explorer", termination=FAILURE, reason="map exhausted")
        return finish(res, env, start, before, k)
    nav = navigate(env, k, pose[0], pose[1], budget=budget)
    res = ControllerResult("Explorer", termination=nav.termination, reason=nav.reason)
    return finish(res, env, start, before, k)


def scan(env: Env, k: KnowledgeState, budget: Optional[int] = None) -> ControllerResult:
    """Three pitch bands, a detector run every quarter turn: 12 frames, 12 rotations."""
    start, before = env.steps, k.summary()
    res = ControllerResult("Scanner")
    for pitch in SCAN_PITCHES:
        for _ in range(4):
            look(env, k, pitch)
            if budget is not None and env.steps - start >= budget:
                res.termination, res.reason = BUDGET, "scan budget"
                return finish(res, env, start, before, k)
            act(env, k, PrimitiveAction(ROTATE_RIGHT))
    return finish(res, env, start, before, k)
