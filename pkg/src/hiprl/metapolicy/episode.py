"""One episode: the meta-controller hands the environment to one controller at a time."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..controllers.base import ControllerResult, look
from ..controllers.motion import NAV_BUDGET, explore, scan
from ..controllers.planner import PLANNER_BUDGET, PlannerControllerConfig, goal_function, run_planner_controller
from ..controllers.stopper import stop_and_answer
from ..knowledge.state import KnowledgeState
from ..world.detect import NoiseModel
from ..world.scene import Scene, rng_stream
from ..world.sim import Env
from ..world.tasks import PUT_IN, TaskSpec, vsp_goal_met
from .features import HIER_CAP, META_ACTIONS, PRIM_BUDGET, History, digest, featurize
from .policy import MetaPolicy, select_action


@dataclass(frozen=True)
class RewardConfig:
    success: float = 1.0
    failure: float = -1.0
    step: float = -0.02
    gamma: float = 1.0
    # shaping, used only by the learner-only baseline
    first_sight: float = 0.0
    first_pickup: float = 0.0

    def __post_init__(self):
        if not self.step < 0 < self.success:
            raise ValueError("need step penalty < 0 < success reward")

    @classmethod
    def shaped(cls) -> "RewardConfig":
        return cls(first_sight=0.1, first_pickup=0.2)


@dataclass(frozen=True)
class EpisodeConfig:
    noise: NoiseModel = field(default_factory=NoiseModel)
    prim_budget: int = PRIM_BUDGET
    hier_cap: int = HIER_CAP
    planner_budget: int = PLANNER_BUDGET
    nav_budget: int = NAV_BUDGET
    reward: RewardConfig = field(default_factory=RewardConfig)

    def to_dict(self) -> dict:
        return {
            "noise": self.noise.to_dict(),
            "prim_budget": self.prim_budget,
            "hier_cap": self.hier_cap,
            "planner_budget": self.planner_budget,
            "nav_budget": self.nav_budget,
            "reward": vars(self.reward).copy(),
        }


@dataclass
class HierRecord:
    index: int
    features: str  # digest of the feature vector the decision was made on
    action: str
    result: dict
    reward: float
    forced: bool = False
    log_end: int = 0  # primitive-log length when the controller returned

    def to_dict(self) -> dict:
        return {"t": "hier", "i": self.index, "features": self.features, "action": self.action,
                "result": self.result, "reward": self.reward, "forced": self.forced, "log_end": self.log_end}


@dataclass
class EpisodeTrace:
    task_id: str
    seed: int
    policy: str
    records: list[HierRecord] = field(default_factory=list)
    primitive_log: list[dict] = field(default_factory=list)
    success: bool = False
    answer: object = None
    expected: object = None
    forced: bool = False
    p: int = 0
    ell: Optional[int] = None
    # per-decision training data; not part of the persisted trace
    features: list = field(default_factory=list, repr=False)
    actions: list = field(default_factory=list, repr=False)
    rewards: list = field(default_factory=list, repr=False)

    @property
    def hier_steps(self) -> int:
        return len(self.records)

    @property
    def decisions(self) -> list[str]:
        return [r.action for r in self.records if not r.forced]

    def returns(self, gamma: float = 1.0) -> list[float]:
        out, g = [], 0.0
        for r in reversed(self.rewards):
            g = r + gamma * g
            out.append(g)
        return out[::-1]

    def outcome(self) -> dict:
        return {"success": self.success, "answer": self.answer, "expected": self.expected,
                "forced": self.forced, "p": self.p, "ell": self.ell, "hier_steps": self.hier_steps}


# -- agents --------------------------------------------------------------------


@dataclass
class Context:
    env: Env
    k: KnowledgeState
    task: TaskSpec
    history: History
    features: np.ndarray
    rng: np.random.Generator
    mode: str
    config: EpisodeConfig


class Agent:
    """Chooses the next meta-action; scripted baselines subclass this."""

    name = "agent"

    def begin(self, ctx: Context) -> None:
        pass

    def decide(self, ctx: Context) -> str:
        raise NotImplementedError


class LearnedAgent(Agent):
    def __init__(self, pi: MetaPolicy):
        self.pi = pi
        self.name = pi.name

    def decide(self, ctx: Context) -> str:
        return select_action(self.pi, ctx.features, ctx.rng, ctx.mode)


def as_agent(policy) -> Agent:
    if isinstance(policy, Agent):
        return policy
    if isinstance(policy, MetaPolicy):
        return LearnedAgent(policy)
    raise TypeError(f"not a policy: {policy!r}")


# -- driver --------------------------------------------------------------------


def invoke(action: str, env: Env, k: KnowledgeState, task: TaskSpec, config: EpisodeConfig) -> ControllerResult:
    remaining = config.prim_budget - env.steps
    if action == "Planner":
        cfg = PlannerControllerConfig(budget=min(config.planner_budget, remaining), nav_budget=config.nav_budget)
        return run_planner_controller(env, k, goal_function(task), config=cfg)
    if action == "Explorer":
        return explore(env, k, budget=min(config.nav_budget, remaining))
    if action == "Scanner":
        return scan(env, k, budget=remaining)
    if action == "Stopper":
        return stop_and_answer(k, task)
    raise ValueError(f"unknown meta-action {action!r}")


def task_success(env: Env, task: TaskSpec, answer) -> bool:
    if task.kind == PUT_IN:
        return vsp_goal_met(env.state, task.subject, task.target)
    return answer is not None and type(answer) is type(task.answer) and answer == task.answer


def _subject_events(k: KnowledgeState, task: TaskSpec) -> None:
    if not k.subject_seen and k.objects_of(task.subject):
        k.subject_seen = True
    if not k.subject_picked and k.held is not None:
        held = [o for o in k.objects if o.tid == k.held]
        if held and held[0].cls == task.subject:
            k.subject_picked = True


def run_episode(scene: Scene, task: TaskSpec, policy, mode: str = "sample", config: Optional[EpisodeConfig] = None,
                seed: int = 0, on_step: Optional[Callable] = None) -> EpisodeTrace:
    """Decide, invoke, reward; repeat until the Stopper runs or a budget forces it.

    ``on_step(env, k, record)`` is called after every hierarchical step.
    """
    config = config or EpisodeConfig()
    agent = as_agent(policy)
    env = Env(scene, task.start[0], task.start[1], config.noise, rng_stream(seed, f"detector:{task.id}"))
    rng = rng_stream(seed, f"policy:{task.id}")
    k = KnowledgeState.empty(scene.width, scene.height, task.start[0], task.start[1])
    trace = EpisodeTrace(task.id, seed, agent.name, ell=task.oracle_length)
    rw = config.reward
    history = History()
    look(env, k, 0)
    _subject_events(k, task)
    first = Context(env, k, task, history, featurize(k, task, history), rng, mode, config)
    agent.begin(first)
    while True:
        f = featurize(k, task, history)
        forced = env.steps >= config.prim_budget or history.hier_steps >= config.hier_cap - 1
        action = "Stopper" if forced else agent.decide(Context(env, k, task, history, f, rng, mode, config))
        if action not in META_ACTIONS:
            raise ValueError(f"agent chose unknown meta-action {action!r}")
        seen, picked = k.subject_seen, k.subject_picked
        result = invoke(action, env, k, task, config)
        k.hier_steps += 1
        _subject_events(k, task)
        reward = rw.step
        if k.subject_seen and not seen:
            reward += rw.first_sight
        if k.subject_picked and not picked:
            reward += rw.first_pickup
        if action == "Stopper":
            trace.answer = result.answer
            trace.forced = forced
            trace.success = (not forced) and task_success(env, task, result.answer)
            reward += rw.success if trace.success else rw.failure
        history = History(action, result.ok, history.hier_steps + 1, env.steps, result.termination)
        trace.records.append(HierRecord(len(trace.records), digest(f), action, result.to_dict(), reward, forced,
                                         len(env.log)))
        if not forced:
            trace.features.append(f)
            trace.actions.append(META_ACTIONS.index(action))
            trace.rewards.append(reward)
        elif trace.rewards:
            # a forced stop is not a decision; its reward lands on the last real one
            trace.rewards[-1] += reward
        if on_step is not None:
            on_step(env, k, trace.records[-1])
        if action == "Stopper":
            break
    trace.expected = task.answer
    trace.primitive_log = env.log
    trace.p = env.steps
    return trace


def replay_decisions(scene: Scene, task: TaskSpec, decisions: list[str], config: EpisodeConfig, seed: int,
                     on_step: Optional[Callable] = None) -> EpisodeTrace:
    """Run an episode whose meta-actions are dictated by a recorded list."""
    return run_episode(scene, task, _Scripted(decisions), "greedy", config, seed, on_step)


class _Scripted(Agent):
    name = "replay"

    def __init__(self, decisions: list[str]):
        self.queue = list(decisions)

    def decide(self, ctx: Context) -> str:
        return self.queue.pop(0) if self.queue else "Stopper"

