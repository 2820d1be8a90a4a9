"""Methods x splits x noise modes, summarised as accuracy / length / SPL / SSPL rows."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..metapolicy.episode import EpisodeConfig, EpisodeTrace
from ..metapolicy.policy import load_policy
from ..metapolicy.scripted import ANSWER_IMMEDIATELY, SCRIPTED_KINDS, scripted_policy
from ..metapolicy.train import evaluate
from ..world.detect import NoiseModel
from ..world.io import load_scenes, load_tasks
from ..world.scene import Scene
from ..world.tasks import PUT_IN, TaskSpec
from .metrics import BenchmarkSummary, EpisodeRecord, accuracy, format_console, format_tsv, summarize
from .suite import UNSEEN, oracle_of, split_tasks
from .traces import config_digest, digest_of, write_traces

SHORTEST_PATH = "ShortestPath"
LEARNED = "HIP-RL"


@dataclass
class BenchConfig:
    methods: list = field(default_factory=lambda: [LEARNED, "PlannerOnly", "LearnerOnly", "Random"])
    splits: list = field(default_factory=lambda: [UNSEEN])
    noise: list = field(default_factory=lambda: ["default", "gt"])
    kind: str = PUT_IN
    count: int = 200
    policy: Optional[str] = None  # checkpoint for the learned method
    task_files: dict = field(default_factory=dict)  # split -> [scenes.json, tasks.json]
    seed: int = 0
    workers: int = 1
    mode: str = "sample"
    traces: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown bench config keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchResult:
    rows: list[BenchmarkSummary]
    records: list[EpisodeRecord]

    def tsv(self) -> str:
        return format_tsv(self.rows)

    def console(self) -> str:
        return format_console(self.rows)


def load_split(config: BenchConfig, split: str) -> list[tuple[Scene, TaskSpec]]:
    if split in config.task_files:
        scenes_path, tasks_path = config.task_files[split]
        scenes = {s.name: s for s in load_scenes(scenes_path)}
        items = []
        for t in load_tasks(tasks_path):
            if t.scene not in scenes:
                raise FileNotFoundError(f"task {t.id} refers to missing scene {t.scene!r}")
            items.append((scenes[t.scene], t))
        return items
    return split_tasks(split, config.count, config.kind)


def resolve_method(name: str, config: BenchConfig):
    if name in SCRIPTED_KINDS:
        return scripted_policy(name)
    if name == LEARNED:
        if not config.policy:
            raise FileNotFoundError("the learned method needs a policy checkpoint")
        return load_policy(config.policy)
    raise ValueError(f"unknown method {name!r}")


def to_records(method: str, split: str, noise: str, items, traces: Sequence[EpisodeTrace]) -> list[EpisodeRecord]:
    out = []
    for (scene, task), tr in zip(items, traces):
        out.append(EpisodeRecord(int(tr.success), int(tr.p), float(oracle_of(scene, task)),
                                 bool(tr.success) if task.is_question else None, task.kind, split, task.id,
                                 method, noise))
    return out


def shortest_path_records(split: str, items) -> list[EpisodeRecord]:
    out = []
    for scene, task in items:
        ell = oracle_of(scene, task)
        out.append(EpisodeRecord(1, ell, float(ell), True if task.is_question else None, task.kind, split, task.id,
                                 SHORTEST_PATH, "gt"))
    return out


def run_benchmark(config: BenchConfig, out_dir=None) -> BenchResult:
    """Run every (method, split, noise) cell on the same task sets.

    The baseline accuracy ``b`` for each (split, noise) cell comes from an
    AnswerImmediately run over the same tasks.
    """
    policies = {m: resolve_method(m, config) for m in config.methods if m != SHORTEST_PATH}
    baseline = scripted_policy(ANSWER_IMMEDIATELY)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None and config.traces:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    rows: list[BenchmarkSummary] = []
    records: list[EpisodeRecord] = []
    for split in config.splits:
        items = load_split(config, split)
        if not items:
            raise ValueError(f"split {split!r} has no tasks")
        if SHORTEST_PATH in config.methods:
            recs = shortest_path_records(split, items)
            records += recs
            rows.append(summarize(SHORTEST_PATH, split, "gt", recs, 0.0, digest_of(config.to_dict()), config.seed))
        for noise in config.noise:
            ep = EpisodeConfig(noise=NoiseModel.named(noise))
            base = evaluate(baseline, items, ep, seed=config.seed, mode=config.mode, workers=config.workers)
            b = accuracy(to_records(ANSWER_IMMEDIATELY, split, noise, items, base))
            for name, pol in policies.items():
                traces = evaluate(pol, items, ep, seed=config.seed, mode=config.mode, workers=config.workers)
                recs = to_records(name, split, noise, items, traces)
                records += recs
                rows.append(summarize(name, split, noise, recs, b, config_digest(ep, pol, config.mode), config.seed))
                if out is not None and config.traces:
                    write_traces(out / "traces" / f"{name}_{split}_{noise}.jsonl",
                                 [(tr, s, t, ep, pol, config.mode) for (s, t), tr in zip(items, traces)])
    result = BenchResult(rows, records)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.tsv").write_text(result.tsv())
        (out / "summary.txt").write_text(result.console())
        with open(out / "records.jsonl", "w") as fh:
            for r in records:
                fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    return result


def recompute(records: Sequence[EpisodeRecord], b: float, seed: int = 0, config_digest_: str = "") -> BenchmarkSummary:
    """Rebuild one summary row from its stored records."""
    r = records[0]
    return summarize(r.method, r.split, r.noise, records, b, config_digest_, seed)

