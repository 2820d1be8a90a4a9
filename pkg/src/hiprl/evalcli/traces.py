"""Line-delimited episode traces: a header, then log entries and decisions in order."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..metapolicy.episode import EpisodeConfig, EpisodeTrace, RewardConfig
from ..metapolicy.policy import MetaPolicy
from ..world.detect import NoiseModel
from ..world.io import FormatError, scene_from_dict, scene_to_dict, task_from_dict, task_to_dict
from ..world.scene import Scene
from ..world.tasks import TaskSpec

TRACE_FORMAT = "hiprl-trace"
TRACE_VERSION = 1


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest_of(obj) -> str:
    return hashlib.sha1(canonical(obj).encode()).hexdigest()[:16]


def policy_identity(policy) -> dict:
    if isinstance(policy, MetaPolicy):
        return {"name": policy.name, "weights": digest_of([policy.actor.tolist(), policy.critic.tolist(),
                                                           policy.temperature, list(policy.allowed)])}
    return {"name": getattr(policy, "name", type(policy).__name__)}


def config_digest(config: EpisodeConfig, policy, mode: str) -> str:
    return digest_of({"episode": config.to_dict(), "policy": policy_identity(policy), "mode": mode})


def episode_config_from_dict(d: dict) -> EpisodeConfig:
    try:
        return EpisodeConfig(NoiseModel(**d["noise"]), d["prim_budget"], d["hier_cap"], d["planner_budget"],
                             d["nav_budget"], RewardConfig(**d["reward"]))
    except (KeyError, TypeError) as err:
        raise FormatError(f"malformed episode config: {err}") from err


def trace_lines(trace: EpisodeTrace, scene: Scene, task: TaskSpec, config: EpisodeConfig, policy, mode: str) -> list[str]:
    header = {
        "t": "header",
        "format": TRACE_FORMAT,
        "version": TRACE_VERSION,
        "seeds": {"episode": trace.seed, "scene": scene.seed, "task": task.seed},
        "config_digest": config_digest(config, policy, mode),
        "policy": policy_identity(policy),
        "mode": mode,
        "episode_config": config.to_dict(),
        "scene": scene_to_dict(scene),
        "task": task_to_dict(task),
    }
    lines = [canonical(header)]
    pos = 0
    for rec in trace.records:
        for i in range(pos, rec.log_end):
            lines.append(canonical({"i": i, **trace.primitive_log[i]}))
        pos = rec.log_end
        lines.append(canonical(rec.to_dict()))
    lines.append(canonical({"t": "outcome", **trace.outcome()}))
    return lines


def write_traces(path, items: Iterable[tuple]) -> None:
    """Write (trace, scene, task, config, policy, mode) tuples to one file."""
    with open(path, "w") as fh:
        for item in items:
            for line in trace_lines(*item):
                fh.write(line + "\n")


@dataclass
class StoredTrace:
    header: dict
    log: list[dict] = field(default_factory=list)
    hier: list[dict] = field(default_factory=list)
    outcome: Optional[dict] = None

    @property
    def scene(self) -> Scene:
        return scene_from_dict(self.header["scene"])

    @property
    def task(self) -> TaskSpec:
        return task_from_dict(self.header["task"])

    @property
    def config(self) -> EpisodeConfig:
        return episode_config_from_dict(self.header["episode_config"])

    @property
    def seed(self) -> int:
        return int(self.header["seeds"]["episode"])

    @property
    def decisions(self) -> list[str]:
        return [h["action"] for h in self.hier if not h.get("forced")]


def read_traces(path) -> list[StoredTrace]:
    out: list[StoredTrace] = []
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as err:
            raise FormatError(f"{path}:{n}: not JSON: {err}") from err
        kind = d.get("t")
        if kind == "header":
            if d.get("format") != TRACE_FORMAT:
                raise FormatError(f"{path}:{n}: not a trace file")
            if d.get("version") != TRACE_VERSION:
                raise FormatError(f"{path}:{n}: unsupported trace version {d.get('version')!r}")
            out.append(StoredTrace(d))
            continue
        if not out:
            raise FormatError(f"{path}:{n}: record before header")
        cur = out[-1]
        if kind in ("prim", "det"):
            cur.log.append(d)
        elif kind == "hier":
            cur.hier.append(d)
        elif kind == "outcome":
            cur.outcome = d
        else:
            raise FormatError(f"{path}:{n}: unknown record type {kind!r}")
    return out
