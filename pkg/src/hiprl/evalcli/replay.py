"""Re-execute stored traces and render them as text."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..knowledge.goals import IQA_CHECK
from ..knowledge.state import BLOCKED, FREE, KnowledgeState
from ..metapolicy.episode import replay_decisions
from ..world.tasks import PUT_IN, TaskSpec
from .traces import StoredTrace, canonical, read_traces

ARROWS = "^>v<"


@dataclass
class EpisodeReplay:
    task_id: str
    entries: int
    divergence: Optional[int] = None  # first log index whose recomputed entry differs
    detail: str = ""
    phases: list[str] = field(default_factory=list)
    frames: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.divergence is None


@dataclass
class ReplayReport:
    episodes: list[EpisodeReplay] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.episodes)

    @property
    def first_divergence(self) -> Optional[tuple[int, int]]:
        for n, e in enumerate(self.episodes):
            if e.divergence is not None:
                return n, e.divergence
        return None

    def text(self, render: bool = False) -> str:
        out = []
        for n, e in enumerate(self.episodes):
            status = "ok" if e.ok else f"DIVERGED at entry {e.divergence}: {e.detail}"
            out.append(f"episode {n} task={e.task_id} entries={e.entries} {status}")
            out.append("  phases: " + " -> ".join(e.phases))
            if render:
                out.extend(e.frames)
        return "\n".join(out) + "\n"


def phase_label(record: dict, task: TaskSpec) -> list[str]:
    action = record["action"]
    if action == "Explorer":
        return ["explore"]
    if action == "Scanner":
        return ["scan"]
    if action == "Stopper":
        return ["stop"]
    labels = []
    for g in record["result"].get("goals", []) or [IQA_CHECK]:
        if g == IQA_CHECK:
            labels.append(f"plan(check receptacles for {task.subject})")
        elif task.kind == PUT_IN:
            labels.append(f"plan(put {task.subject} in {task.target})")
        else:
            labels.append(f"plan({g})")
    return labels


def phases(hier: list[dict], task: TaskSpec) -> list[str]:
    out: list[str] = []
    for rec in hier:
        for label in phase_label(rec, task):
            if not out or out[-1] != label:
                out.append(label)
    return out


def render_knowledge(k: KnowledgeState) -> str:
    """Known map with receptacle records (upper case once checked) and the agent."""
    rows = []
    marks = {}
    for r in k.live_receptacles():
        ch = r.cls[0]
        marks[r.anchor] = ch.upper() if any(x.checked for x in k.colocated(r.rid)) else ch.lower()
    for y in range(k.height):
        row = []
        for x in range(k.width):
            c = (x, y)
            if c == tuple(k.agent):
                row.append(ARROWS[k.heading])
            elif c in marks:
                row.append(marks[c])
            else:
                v = k.cell(c)
                row.append("#" if v == BLOCKED else "." if v == FREE else " ")
        rows.append("".join(row))
    return "\n".join(rows)


def replay_trace(stored: StoredTrace) -> EpisodeReplay:
    scene, task, config = stored.scene, stored.task, stored.config
    frames: list[str] = []

    def on_step(env, k, record):
        head = (f"-- step {record.index}: {record.action} -> {record.result['termination']}"
                f" (primitives so far {env.steps})")
        frames.append(head + "\n" + render_knowledge(k))

    trace = replay_decisions(scene, task, stored.decisions, config, stored.seed, on_step)
    fresh = trace.primitive_log
    rep = EpisodeReplay(task.id, len(stored.log), phases=phases(stored.hier, task), frames=frames)
    for i in range(max(len(fresh), len(stored.log))):
        if i >= len(fresh) or i >= len(stored.log):
            rep.divergence, rep.detail = i, "log length differs"
            break
        logged = {key: v for key, v in stored.log[i].items() if key != "i"}
        if canonical(logged) != canonical(fresh[i]):
            rep.divergence, rep.detail = i, "observation mismatch"
            break
    if rep.ok and stored.outcome is not None:
        if canonical({"t": "outcome", **trace.outcome()}) != canonical(stored.outcome):
            rep.divergence, rep.detail = len(fresh), "outcome differs"
    return rep


def replay(path) -> ReplayReport:
    return ReplayReport([replay_trace(s) for s in read_traces(path)])
