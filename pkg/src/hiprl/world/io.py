"""Versioned JSON files for scenes and tasks."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .scene import Receptacle, Scene, SmallObject
from .tasks import TaskSpec

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def scene_to_dict(scene: Scene) -> dict:
    return {
        "name": scene.name,
        "seed": scene.seed,
        "split": scene.split,
        "width": scene.width,
        "height": scene.height,
        "walls": sorted([list(c) for c in scene.walls]),
        "receptacles": [
            {"id": r.id, "rtype": r.rtype, "cell": list(r.cell), "openable": r.openable, "capacity": r.capacity}
            for r in scene.receptacles
        ],
        "objects": [
            {"id": o.id, "otype": o.otype, "receptacle": o.receptacle, "cell": list(o.cell) if o.cell else None}
            for o in scene.objects
        ],
    }


def scene_from_dict(d: dict) -> Scene:
    try:
        return Scene(
            d["width"],
            d["height"],
            frozenset(tuple(c) for c in d["walls"]),
            tuple(Receptacle(r["id"], r["rtype"], tuple(r["cell"]), r["openable"], r.get("capacity", 1)) for r in d["receptacles"]),
            tuple(
                SmallObject(o["id"], o["otype"], o.get("receptacle"), tuple(o["cell"]) if o.get("cell") else None)
                for o in d["objects"]
            ),
            d.get("seed", 0),
            d.get("split", "train"),
            d.get("name", ""),
        )
    except (KeyError, TypeError) as err:
        raise FormatError(f"malformed scene record: {err}") from err


def task_to_dict(t: TaskSpec) -> dict:
    return {
        "id": t.id,
        "kind": t.kind,
        "scene": t.scene,
        "subject": t.subject,
        "target": t.target,
        "answer": t.answer,
        "start": [list(t.start[0]), t.start[1]],
        "seed": t.seed,
        "oracle_length": t.oracle_length,
        "extra": dict(t.extra),
    }


def task_from_dict(d: dict) -> TaskSpec:
    try:
        return TaskSpec(
            d["id"], d["kind"], d["scene"], d["subject"], d.get("target"), d.get("answer"),
            (tuple(d["start"][0]), int(d["start"][1])), d.get("seed", 0), d.get("oracle_length"),
            dict(d.get("extra") or {}),
        )
    except (KeyError, TypeError, IndexError) as err:
        raise FormatError(f"malformed task record: {err}") from err


def _dump(kind: str, records: list[dict]) -> str:
    return json.dumps({"format": kind, "version": FORMAT_VERSION, "records": records}, indent=1, sort_keys=True) + "\n"


def _load(text: str, kind: str) -> list[dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise FormatError(f"not valid JSON: {err}") from err
    if not isinstance(doc, dict) or doc.get("format") != kind:
        raise FormatError(f"expected a {kind} file")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported {kind} file version {doc.get('version')!r} (expected {FORMAT_VERSION})")
    return doc["records"]


def dumps_scenes(scenes: Iterable[Scene]) -> str:
    return _dump("scenes", [scene_to_dict(s) for s in scenes])


def loads_scenes(text: str) -> list[Scene]:
    return [scene_from_dict(d) for d in _load(text, "scenes")]


def dumps_tasks(tasks: Iterable[TaskSpec]) -> str:
    return _dump("tasks", [task_to_dict(t) for t in tasks])


def loads_tasks(text: str) -> list[TaskSpec]:
    return [task_from_dict(d) for d in _load(text, "tasks")]


def save_scenes(path, scenes) -> None:
    Path(path).write_text(dumps_scenes(scenes))


def load_scenes(path) -> list[Scene]:
    return loads_scenes(Path(path).read_text())


def save_tasks(path, tasks) -> None:
    Path(path).write_text(dumps_tasks(tasks))


def load_tasks(path) -> list[TaskSpec]:
    return loads_tasks(Path(path).read_text())
