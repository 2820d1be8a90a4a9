"""Synchronous batched advantage actor-critic for the meta-policy."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..world.scene import Scene, rng_stream
from ..world.tasks import TaskSpec
from .episode import EpisodeConfig, EpisodeTrace, RewardConfig, run_episode
from .policy import MetaPolicy, actor_gradient, critic_gradient


class DivergenceError(RuntimeError):
    """Weights left the configured bound during training."""


@dataclass(frozen=True)
class TrainConfig:
    workers: int = 1
    batch_size: int = 8  # episodes per update
    lr_actor: float = 0.01
    lr_critic: float = 0.05
    entropy: float = 0.01
    total_hier_steps: int = 20_000
    probe_every: int = 2_000
    weight_bound: float = 1e3
    seed: int = 0
    probe_mode: str = "sample"  # the learned policy is stochastic; greedy decoding can cycle

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CurvePoint:
    hier_steps: int
    probe_success: float
    mean_episode_length: float


@dataclass
class TrainResult:
    policy: MetaPolicy
    curve: list[CurvePoint] = field(default_factory=list)
    episodes: int = 0
    hier_steps: int = 0
    updates: int = 0


def _episode_job(args) -> EpisodeTrace:
    scene, task, pi, mode, config, seed = args
    return run_episode(scene, task, pi, mode, config, seed)


def run_batch(jobs: list, workers: int = 1) -> list[EpisodeTrace]:
    """Run episodes, in parallel if asked; results come back in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_episode_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode_job, jobs))


def batch_gradients(pi: MetaPolicy, traces: Sequence[EpisodeTrace], gamma: float, beta: float):
    """Actor gradient summed over every decision in the batch; critic gradient averaged.

    Summing the actor terms applies each worker's accumulated gradient once, as
    the asynchronous scheme would. The critic's squared error is averaged so its
    step stays below the least-squares stability limit for unit-scale features.
    """
    ga = np.zeros_like(pi.actor)
    gc = np.zeros_like(pi.critic)
    n = 0
    for tr in traces:
        for f, a, g in zip(tr.features, tr.actions, tr.returns(gamma)):
            adv = g - pi.value(f)
            ga += actor_gradient(pi, f, a, adv, beta)
            gc += critic_gradient(pi, f, g)
            n += 1
    return ga, gc / max(n, 1)


def apply_update(pi: MetaPolicy, ga: np.ndarray, gc: np.ndarray, config: TrainConfig) -> None:
    pi.actor += config.lr_actor * ga  # ascent on the actor objective
    pi.critic -= config.lr_critic * gc  # descent on the squared error
    worst = max(np.abs(pi.actor).max(), np.abs(pi.critic).max())
    if not np.isfinite(worst) or worst > config.weight_bound:
        raise DivergenceError(f"weight magnitude {worst:.3g} exceeds bound {config.weight_bound}")


def evaluate(pi, tasks: Sequence[tuple[Scene, TaskSpec]], config: EpisodeConfig, seed: int = 0, mode: str = "sample",
             workers: int = 1) -> list[EpisodeTrace]:
    jobs = [(s, t, pi, mode, config, seed) for s, t in tasks]
    return run_batch(jobs, workers)


def success_rate(traces: Sequence[EpisodeTrace]) -> float:
    return float(np.mean([t.success for t in traces])) if traces else 0.0


def train(pi: MetaPolicy, tasks: Sequence[tuple[Scene, TaskSpec]], reward: Optional[RewardConfig] = None,
          config: Optional[TrainConfig] = None, episode_config: Optional[EpisodeConfig] = None,
          probe: Optional[Sequence[tuple[Scene, TaskSpec]]] = None,
          on_update: Optional[Callable[[TrainResult], None]] = None) -> TrainResult:
    """Train in place until the hierarchical-step budget is spent.

    Each batch runs ``batch_size`` sampled episodes with frozen weights, then
    applies one update. The learning curve records success on
    ``probe`` every ``probe_every`` hierarchical steps (and at the start and end).
    """
    config = config or TrainConfig()
    episode_config = episode_config or EpisodeConfig()
    if reward is not None:
        episode_config = EpisodeConfig(episode_config.noise, episode_config.prim_budget, episode_config.hier_cap,
                                       episode_config.planner_budget, episode_config.nav_budget, reward)
    if not tasks:
        raise ValueError("no training tasks")
    order = rng_stream(config.seed, "train-order")
    out = TrainResult(pi)
    next_probe = 0

    def do_probe():
        if probe:
            traces = evaluate(pi, probe, episode_config, seed=config.seed, mode=config.probe_mode,
                              workers=config.workers)
            out.curve.append(CurvePoint(out.hier_steps, success_rate(traces), float(np.mean([t.p for t in traces]))))

    while out.hier_steps < config.total_hier_steps:
        if out.hier_steps >= next_probe:
            do_probe()
            next_probe += config.probe_every
        jobs = []
        for _ in range(config.batch_size):
            scene, task = tasks[int(order.integers(len(tasks)))]
            jobs.append((scene, task, pi.copy(), "sample", episode_config, config.seed * 1_000_003 + out.episodes))
            out.episodes += 1
        traces = run_batch(jobs, config.workers)
        out.hier_steps += sum(t.hier_steps for t in traces)
        ga, gc = batch_gradients(pi, traces, episode_config.reward.gamma, config.entropy)
        apply_update(pi, ga, gc, config)
        out.updates += 1
        if on_update is not None:
            on_update(out)
    do_probe()
    return out


def write_curve(path, curve: Sequence[CurvePoint]) -> None:
    lines = ["hier_steps\tprobe_success\tmean_episode_length"]
    lines += [f"{c.hier_steps}\t{c.probe_success:.6f}\t{c.mean_episode_length:.3f}" for c in curve]
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve(path) -> list[CurvePoint]:
    rows = Path(path).read_text().strip().splitlines()[1:]
    out = []
    for r in rows:
        h, s, m = r.split("\t")
        out.append(CurvePoint(int(h), float(s), float(m)))
    return out
