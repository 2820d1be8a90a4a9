"""Linear softmax actor with a linear critic over meta-actions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .features import FEATURE_DIM, META_ACTIONS, schema_hash

CHECKPOINT_FORMAT = "hiprl-policy"
CHECKPOINT_VERSION = 1


class SchemaMismatchError(ValueError):
    """A checkpoint was written for a different feature layout or action set."""


@dataclass
class MetaPolicy:
    actor: np.ndarray = None  # (actions, features)
    critic: np.ndarray = None  # (features,)
    temperature: float = 1.0
    allowed: tuple[str, ...] = META_ACTIONS
    name: str = "HIP-RL"

    def __post_init__(self):
        if self.actor is None:
            self.actor = np.zeros((len(META_ACTIONS), FEATURE_DIM))
        if self.critic is None:
            self.critic = np.zeros(FEATURE_DIM)
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        unknown = set(self.allowed) - set(META_ACTIONS)
        if unknown or not self.allowed:
            raise ValueError(f"bad action subset {self.allowed}")

    @property
    def mask(self) -> np.ndarray:
        return np.array([a in self.allowed for a in META_ACTIONS])

    def logits(self, f: np.ndarray) -> np.ndarray:
        z = self.actor @ f / self.temperature
        return np.where(self.mask, z, -np.inf)

    def probs(self, f: np.ndarray) -> np.ndarray:
        z = self.logits(f)
        z = z - z[self.mask].max()
        e = np.where(self.mask, np.exp(z), 0.0)
        return e / e.sum()

    def value(self, f: np.ndarray) -> float:
        return float(self.critic @ f)

    def copy(self) -> "MetaPolicy":
        return MetaPolicy(self.actor.copy(), self.critic.copy(), self.temperature, self.allowed, self.name)


def select_action(pi: MetaPolicy, f: np.ndarray, rng: np.random.Generator, mode: str = "sample") -> str:
    """Sample from the softmax, or take the argmax (ties go to the earlier action)."""
    p = pi.probs(f)
    if mode == "greedy":
        return META_ACTIONS[int(np.argmax(p))]
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    return META_ACTIONS[int(rng.choice(len(p), p=p))]


# -- gradients -----------------------------------------------------------------


def entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def actor_objective(pi: MetaPolicy, f: np.ndarray, a: int, advantage: float, beta: float) -> float:
    """advantage * log pi(a|f) + beta * H(pi(.|f)); the advantage is held fixed."""
    p = pi.probs(f)
    return advantage * float(np.log(p[a])) + beta * entropy(p)


def actor_gradient(pi: MetaPolicy, f: np.ndarray, a: int, advantage: float, beta: float) -> np.ndarray:
    p = pi.probs(f)
    onehot = np.zeros_like(p)
    onehot[a] = 1.0
    logp = np.log(np.where(p > 0, p, 1.0))
    h = entropy(p)
    dz = advantage * (onehot - p) - beta * p * (logp + h)
    return np.outer(dz, f) / pi.temperature


def critic_loss(pi: MetaPolicy, f: np.ndarray, ret: float) -> float:
    return 0.5 * (ret - pi.value(f)) ** 2


def critic_gradient(pi: MetaPolicy, f: np.ndarray, ret: float) -> np.ndarray:
    """Gradient of the squared error with respect to the critic weights."""
    return -(ret - pi.value(f)) * f


def gradient_check(pi: MetaPolicy, f: np.ndarray, a: int, ret: float, beta: float = 0.01, eps: float = 1e-5) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The gap for each weight block is measured as |g - n| / (|g| + |n|) in the
    Euclidean norm, which stays meaningful when individual entries are near zero.
    """
    adv = ret - pi.value(f)
    ga = actor_gradient(pi, f, a, adv, beta)
    na = np.zeros_like(pi.actor)
    for idx in np.ndindex(pi.actor.shape):
        w = pi.actor[idx]
        pi.actor[idx] = w + eps
        up = actor_objective(pi, f, a, adv, beta)
        pi.actor[idx] = w - eps
        down = actor_objective(pi, f, a, adv, beta)
        pi.actor[idx] = w
        na[idx] = (up - down) / (2 * eps)
    gc = critic_gradient(pi, f, ret)
    nc = np.zeros_like(pi.critic)
    for i in range(len(pi.critic)):
        w = pi.critic[i]
        pi.critic[i] = w + eps
        up = critic_loss(pi, f, ret)
        pi.critic[i] = w - eps
        down = critic_loss(pi, f, ret)
        pi.critic[i] = w
        nc[i] = (up - down) / (2 * eps)
    return max(_rel(ga, na), _rel(gc, nc))


def _rel(g: np.ndarray, n: np.ndarray) -> float:
    denom = np.linalg.norm(g) + np.linalg.norm(n)
    return 0.0 if denom < 1e-12 else float(np.linalg.norm(g - n) / denom)


# -- checkpoints ---------------------------------------------------------------


def policy_to_dict(pi: MetaPolicy, config: Optional[dict] = None) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "schema": schema_hash(),
        "actions": list(META_ACTIONS),
        "name": pi.name,
        "allowed": list(pi.allowed),
        "temperature": pi.temperature,
        "actor": pi.actor.tolist(),
        "critic": pi.critic.tolist(),
        "config": config or {},
    }


def policy_from_dict(d: dict) -> MetaPolicy:
    if d.get("format") != CHECKPOINT_FORMAT or d.get("version") != CHECKPOINT_VERSION:
        raise SchemaMismatchError(f"not a version-{CHECKPOINT_VERSION} policy checkpoint")
    if d.get("schema") != schema_hash() or tuple(d.get("actions", ())) != META_ACTIONS:
        raise SchemaMismatchError("checkpoint feature schema does not match this build")
    actor = np.array(d["actor"], dtype=float)
    critic = np.array(d["critic"], dtype=float)
    if actor.shape != (len(META_ACTIONS), FEATURE_DIM) or critic.shape != (FEATURE_DIM,):
        raise SchemaMismatchError("checkpoint weight shapes do not match this build")
    return MetaPolicy(actor, critic, float(d["temperature"]), tuple(d["allowed"]), d.get("name", "HIP-RL"))


def save_policy(path, pi: MetaPolicy, config: Optional[dict] = None) -> None:
    Path(path).write_text(json.dumps(policy_to_dict(pi, config), indent=1, sort_keys=True) + "\n")


def load_policy(path) -> MetaPolicy:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaMismatchError(f"unreadable checkpoint: {e}") from e
    return policy_from_dict(d)
