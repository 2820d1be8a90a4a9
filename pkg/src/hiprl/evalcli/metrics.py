"""Success weighted by path length, its baseline-shifted variant, and bootstrap intervals."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

BOOTSTRAP_RESAMPLES = 10_000


@dataclass(frozen=True)
class EpisodeRecord:
    success: int  # S_i
    p: int  # primitive path length
    ell: float  # oracle shortest-path estimate
    correct: Optional[bool] = None  # IQA answer correctness
    kind: str = ""
    split: str = ""
    task_id: str = ""
    method: str = ""
    noise: str = ""

    def __post_init__(self):
        if self.success not in (0, 1):
            raise ValueError("success must be 0 or 1")
        if self.p < 0:
            raise ValueError("path length must be non-negative")
        if not self.ell > 0:
            raise ValueError("oracle length must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def spl(records: Sequence[EpisodeRecord]) -> float:
    """Mean of S_i * l_i / max(p_i, l_i)."""
    if not records:
        raise ValueError("spl of an empty record list")
    return float(sum(r.success * r.ell / max(r.p, r.ell) for r in records) / len(records))


def accuracy(records: Sequence[EpisodeRecord]) -> float:
    if not records:
        raise ValueError("accuracy of an empty record list")
    return float(sum(r.success for r in records) / len(records))


def sspl_value(mu: float, b: float, spl_value: float) -> float:
    """(mu - b) / (1 - b) * SPL; negative when the method is below the baseline."""
    if not 0.0 <= b < 1.0:
        raise ValueError(f"baseline accuracy must be in [0, 1), got {b}")
    return (mu - b) / (1.0 - b) * spl_value


def sspl(records: Sequence[EpisodeRecord], b: float) -> float:
    return sspl_value(accuracy(records), b, spl(records))


def bootstrap_ci(values: Sequence[float], stat: Callable[[np.ndarray], float] = np.mean,
                 resamples: int = BOOTSTRAP_RESAMPLES, seed: int = 0, level: float = 0.95) -> tuple[float, float]:
    """Percentile interval of ``stat`` over resampled episodes."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("bootstrap of an empty sample")
    rng = np.random.default_rng(np.random.SeedSequence([seed, x.size]))
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    if stat is np.mean:
        stats = x[idx].mean(axis=1)
    else:
        stats = np.array([stat(x[i]) for i in idx])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


@dataclass(frozen=True)
class BenchmarkSummary:
    method: str
    split: str
    noise: str
    mu: float
    mean_length: float
    spl: float
    b: float
    sspl: float
    n: int
    ci_low: float
    ci_high: float
    digest: str

    COLUMNS = ("method", "split", "noise", "n", "mu", "ci_low", "ci_high", "mean_length", "spl", "b", "sspl", "digest")

    def row(self) -> list[str]:
        d = asdict(self)
        return [_fmt(d[c]) for c in self.COLUMNS]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def records_digest(records: Sequence[EpisodeRecord]) -> str:
    text = json.dumps([r.to_dict() for r in records], sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(text.encode()).hexdigest()[:16]


def summarize(method: str, split: str, noise: str, records: Sequence[EpisodeRecord], b: float,
              config_digest: str = "", seed: int = 0) -> BenchmarkSummary:
    """Everything in the row is recomputable from ``records`` and ``b``."""
    mu = accuracy(records)
    s = spl(records)
    lo, hi = bootstrap_ci([r.success for r in records], seed=seed)
    digest = hashlib.sha1((config_digest + records_digest(records)).encode()).hexdigest()[:16]
    return BenchmarkSummary(method, split, noise, mu, float(np.mean([r.p for r in records])), s, b,
                            sspl_value(mu, b, s), len(records), lo, hi, digest)


def format_tsv(rows: Sequence[BenchmarkSummary]) -> str:
    lines = ["\t".join(BenchmarkSummary.COLUMNS)]
    lines += ["\t".join(r.row()) for r in rows]
    return "\n".join(lines) + "\n"


def format_console(rows: Sequence[BenchmarkSummary]) -> str:
    header = ["method", "split", "noise", "n", "accuracy", "95% CI", "length", "SPL", "b", "SSPL"]
    body = [
        [r.method, r.split, r.noise, str(r.n), f"{100 * r.mu:.1f}%", f"[{100 * r.ci_low:.1f}, {100 * r.ci_high:.1f}]",
         f"{r.mean_length:.1f}", f"{r.spl:.3f}", f"{r.b:.3f}", f"{r.sspl:.3f}"]
        for r in rows
    ]
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    out.append("  ".join("-" * w for w in widths))
    out += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(out) + "\n"
