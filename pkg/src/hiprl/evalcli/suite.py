"""Standard scene/task splits used by training, benchmarks and the acceptance tests."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from ..world import shortest_path_estimate
from ..world.scene import Scene, generate_scene
from ..world.tasks import PUT_IN, NoValidTaskError, TaskSpec, generate_task

TRAIN, SEEN, UNSEEN = "train", "seen", "unseen"
SPLITS = (TRAIN, SEEN, UNSEEN)
UNSEEN_BASE = 10_000  # scene seeds at or above this are never trained on


def train_scenes(n: int) -> list[Scene]:
    return [generate_scene(s, split=TRAIN, name=f"train-{s}") for s in range(n)]


def _tasks_for(scene: Scene, seeds, kind: str, split: str) -> list[tuple[Scene, TaskSpec]]:
    out = []
    for seed in seeds:
        try:
            t = generate_task(scene, seed, kind, task_id=f"{scene.name}-{kind}-{seed}")
        except NoValidTaskError:
            break
        out.append((scene, replace(t, extra={**t.extra, "split": split})))
    return out


def split_tasks(split: str, count: int, kind: str = PUT_IN, per_scene: int = 3, scenes: int = 60,
                start: int = 0) -> list[tuple[Scene, TaskSpec]]:
    """``count`` (scene, task) pairs for one split.

    Training and seen-test tasks share the scenes ``train-0 .. train-{scenes-1}``
    with disjoint task seeds; unseen tasks get one task per fresh scene.
    """
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    out: list[tuple[Scene, TaskSpec]] = []
    if split == UNSEEN:
        s = UNSEEN_BASE + start
        while len(out) < count:
            scene = generate_scene(s, split=UNSEEN, name=f"unseen-{s}")
            out += _tasks_for(scene, [s], kind, UNSEEN)
            s += 1
        return out
    rounds = 1 if split == TRAIN else max(1, -(-count // (per_scene * scenes)))
    for r in range(rounds):
        base = 0 if split == TRAIN else per_scene * (1 + r)
        for scene in train_scenes(scenes):
            s = int(scene.seed)
            out += _tasks_for(scene, [100 * s + base + j for j in range(per_scene)], kind, split)
    return out[:count]


def with_oracle(items: list[tuple[Scene, TaskSpec]]) -> list[tuple[Scene, TaskSpec]]:
    """Fill in the cached oracle length where it is missing."""
    return [(s, t if t.oracle_length is not None else replace(t, oracle_length=max(1, shortest_path_estimate(s, t))))
            for s, t in items]


def oracle_of(scene: Scene, task: TaskSpec) -> int:
    if task.oracle_length is not None:
        return max(1, int(task.oracle_length))
    return max(1, shortest_path_estimate(scene, task))


def split_of(task: TaskSpec, default: Optional[str] = None) -> str:
    return str(task.extra.get("split", default or ""))
