"""``hiprl`` command line: scene/task generation, planning, episodes, training, benchmarks, replay."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from ..metapolicy.episode import EpisodeConfig, RewardConfig, run_episode
from ..metapolicy.policy import MetaPolicy, SchemaMismatchError, load_policy, save_policy
from ..metapolicy.scripted import SCRIPTED_KINDS, scripted_policy
from ..metapolicy.train import DivergenceError, TrainConfig, train, write_curve
from ..pddl import PDDLError, ground, load_domain, parse_domain, parse_problem
from ..planner import Outcome
from ..planner import plan as run_planner
from ..planner import validate
from ..world.detect import NoiseModel
from ..world.io import FormatError, load_scenes, load_tasks, save_scenes, save_tasks
from ..world.scene import generate_scene
from ..world.tasks import TASK_KINDS, NoValidTaskError, generate_task
from .bench import BenchConfig, run_benchmark
from .replay import replay
from .suite import with_oracle
from .traces import write_traces

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
# `plan` only: the problem has no plan, or the search ran out of budget
EXIT_IMPOSSIBLE, EXIT_EXHAUSTED = 4, 5


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get("HIPRL_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"HIPRL_SEED must be an integer, got {raw!r}") from None


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: not JSON: {err}") from err


def resolve_policy(spec: str):
    if spec in SCRIPTED_KINDS:
        return scripted_policy(spec)
    return load_policy(spec)


# -- subcommands ----------------------------------------------------------------


def cmd_gen_scenes(args) -> int:
    scenes = [generate_scene(s, split=args.split, name=f"{args.split}-{s}") for s in range(args.seed, args.seed + args.count)]
    save_scenes(args.out, scenes)
    print(f"wrote {len(scenes)} scenes to {args.out}")
    return EXIT_OK


def cmd_gen_tasks(args) -> int:
    tasks = []
    for scene in load_scenes(args.scenes):
        for j in range(args.count):
            seed = 100 * scene.seed + args.seed + j
            try:
                t = generate_task(scene, seed, args.kind, task_id=f"{scene.name}-{args.kind}-{seed}")
            except NoValidTaskError:
                continue
            split = args.split or scene.split
            (_, t), = with_oracle([(scene, replace(t, extra={**t.extra, "split": split}))])
            tasks.append(t)
    save_tasks(args.out, tasks)
    print(f"wrote {len(tasks)} tasks to {args.out}")
    return EXIT_OK


def cmd_plan(args) -> int:
    positional = [p for p in (args.domain_file, args.problem_file) if p]
    if len(positional) == 1 and not args.problem:
        positional = [None] + positional  # a lone file is the problem
    domain_path = args.domain or (positional[0] if positional else None)
    problem_path = args.problem or (positional[1] if len(positional) > 1 else None)
    if problem_path is None:
        raise UsageError("plan needs a problem file")
    domain = parse_domain(Path(domain_path).read_text()) if domain_path else load_domain()
    problem = parse_problem(Path(problem_path).read_text(), domain)
    task = ground(domain, problem)
    result = run_planner(task)
    print(f"; outcome {result.outcome.value}")
    if result.found:
        report = validate(task, result.plan)
        if not report.valid:
            raise AssertionError(f"planner returned an invalid plan: {report.message}")
        for line in result.plan.lines():
            print(line)
        print(f"; cost {result.plan.cost:g}")
    st = result.stats
    print(f"; expanded {st.expanded} evaluations {st.evaluations} method {st.method} time {st.wall_time * 1000:.1f} ms")
    return {Outcome.PLAN: EXIT_OK, Outcome.IMPOSSIBLE: EXIT_IMPOSSIBLE}.get(result.outcome, EXIT_EXHAUSTED)


def _pick(items, key, wanted, what):
    if not items:
        raise InputError(f"no {what} in file")
    if wanted is None:
        return items[0]
    for x in items:
        if key(x) == wanted:
            return x
    raise InputError(f"{what} {wanted!r} not found")


def cmd_run(args) -> int:
    scenes = load_scenes(args.scene)
    task = _pick(load_tasks(args.task), lambda t: t.id, args.task_id, "task")
    scene = _pick(scenes, lambda s: s.name, task.scene, "scene") if len(scenes) > 1 else scenes[0]
    pol = resolve_policy(args.policy)
    config = EpisodeConfig(noise=NoiseModel.named(args.noise))
    trace = run_episode(scene, task, pol, args.mode, config, args.seed)
    if args.trace_out:
        write_traces(args.trace_out, [(trace, scene, task, config, pol, args.mode)])
    print(json.dumps(trace.outcome(), sort_keys=True))
    return EXIT_OK


def _train_config(raw: dict, seed: int):
    raw = dict(raw)
    reward = RewardConfig(**raw.pop("reward", {}))
    if raw.pop("shaped", False):
        reward = reward.shaped()
    probe = int(raw.pop("probe", 0))
    noise = NoiseModel.named(raw.pop("noise", "default"))
    raw.setdefault("seed", seed)
    return TrainConfig(**raw), EpisodeConfig(noise=noise, reward=reward), probe


def cmd_train(args) -> int:
    scenes = {s.name: s for s in load_scenes(args.scenes)}
    items = []
    for t in load_tasks(args.tasks):
        if t.scene not in scenes:
            raise InputError(f"task {t.id} refers to missing scene {t.scene!r}")
        items.append((scenes[t.scene], t))
    try:
        config, episode, probe = _train_config(_read_json(args.config) if args.config else {}, args.seed)
    except TypeError as err:
        raise InputError(f"bad training config: {err}") from err
    pi = MetaPolicy()
    result = train(pi, items, config=config, episode_config=episode, probe=items[:probe] or None)
    if args.checkpoint_out:
        save_policy(args.checkpoint_out, pi)
    if args.curve_out:
        write_curve(args.curve_out, result.curve)
    print(f"episodes {result.episodes} updates {result.updates} hier_steps {result.hier_steps}")
    for c in result.curve:
        print(f"{c.hier_steps}\t{c.probe_success:.3f}\t{c.mean_episode_length:.1f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    raw = _read_json(args.config) if args.config else {}
    raw.setdefault("seed", args.seed)
    try:
        config = BenchConfig.from_dict(raw)
    except (TypeError, ValueError) as err:
        raise InputError(f"bad bench config: {err}") from err
    result = run_benchmark(config, args.out)
    sys.stdout.write(result.console())
    return EXIT_OK


def cmd_replay(args) -> int:
    report = replay(args.trace)
    sys.stdout.write(report.text(render=args.render))
    if not report.ok:
        n, i = report.first_divergence
        print(f"divergence in episode {n} at entry {i}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser(seed: int) -> argparse.ArgumentParser:
    p = _Parser(prog="hiprl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=seed, help="master seed (default: $HIPRL_SEED or 0)")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("gen-scenes", cmd_gen_scenes, "generate scenes")
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--split", choices=["train", "seen", "unseen"], default="train")
    sp.add_argument("--out", required=True)

    sp = add("gen-tasks", cmd_gen_tasks, "generate tasks with cached oracle lengths")
    sp.add_argument("--scenes", required=True)
    sp.add_argument("--kind", choices=TASK_KINDS, default="VSP-PutIn")
    sp.add_argument("--count", type=int, default=1, help="tasks per scene")
    sp.add_argument("--split", choices=["train", "seen", "unseen"], default=None)
    sp.add_argument("--out", required=True)

    sp = add("plan", cmd_plan, "solve a standalone PDDL problem")
    sp.add_argument("domain_file", nargs="?", default=None, help="domain file")
    sp.add_argument("problem_file", nargs="?", default=None, help="problem file")
    sp.add_argument("--domain", default=None, help="domain file (default: the shipped household domain)")
    sp.add_argument("--problem", default=None)

    sp = add("run", cmd_run, "run one episode")
    sp.add_argument("--scene", required=True, help="scenes file")
    sp.add_argument("--task", required=True, help="tasks file")
    sp.add_argument("--task-id", default=None)
    sp.add_argument("--policy", default="PlannerOnly", help=f"checkpoint path or one of {', '.join(SCRIPTED_KINDS)}")
    sp.add_argument("--noise", choices=["gt", "default"], default="default")
    sp.add_argument("--mode", choices=["sample", "greedy"], default="sample")
    sp.add_argument("--trace-out", default=None)

    sp = add("train", cmd_train, "train the meta-policy")
    sp.add_argument("--scenes", required=True)
    sp.add_argument("--tasks", required=True)
    sp.add_argument("--config", default=None, help="JSON training config")
    sp.add_argument("--checkpoint-out", default=None)
    sp.add_argument("--curve-out", default=None)

    sp = add("bench", cmd_bench, "run a benchmark grid")
    sp.add_argument("--config", default=None, help="JSON benchmark config")
    sp.add_argument("--out", required=True)

    sp = add("replay", cmd_replay, "re-execute a trace and check it")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--render", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser(default_seed()).parse_args(argv)
    except UsageError as err:
        print(f"hiprl: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:  # argparse: --help exits 0, usage errors exit 1
        return int(err.code or 0)
    try:
        return args.fn(args)
    except UsageError as err:
        print(f"hiprl: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FormatError, PDDLError, SchemaMismatchError, FileNotFoundError, IsADirectoryError) as err:
        print(f"hiprl: input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (AssertionError, DivergenceError) as err:
        print(f"hiprl: invariant violated: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as err:  # anything unexpected is a bug, not bad input
        print(f"hiprl: internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
