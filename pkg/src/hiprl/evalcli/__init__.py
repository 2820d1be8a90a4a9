"""Metrics, standard splits, benchmarks, trace persistence/replay and the command line."""

from .bench import SHORTEST_PATH, BenchConfig, BenchResult, run_benchmark
from .metrics import (
    BenchmarkSummary,
    EpisodeRecord,
    accuracy,
    bootstrap_ci,
    format_console,
    format_tsv,
    spl,
    sspl,
    sspl_value,
    summarize,
)
from .replay import ReplayReport, render_knowledge, replay
from .suite import SEEN, SPLITS, TRAIN, UNSEEN, split_tasks, with_oracle
from .traces import StoredTrace, read_traces, write_traces
