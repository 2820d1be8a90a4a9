"""Trainable meta-controller, scripted baselines and the episode/training drivers."""

from .episode import (
    Agent,
    Context,
    EpisodeConfig,
    EpisodeTrace,
    HierRecord,
    LearnedAgent,
    RewardConfig,
    as_agent,
    invoke,
    replay_decisions,
    run_episode,
    task_success,
)
from .features import FEATURE_DIM, FEATURE_NAMES, HIER_CAP, META_ACTIONS, PRIM_BUDGET, History, featurize, schema_hash
from .policy import (
    MetaPolicy,
    SchemaMismatchError,
    actor_gradient,
    critic_gradient,
    gradient_check,
    load_policy,
    save_policy,
    select_action,
)
from .scripted import (
    ANSWER_IMMEDIATELY,
    LEARNER_ONLY,
    PLANNER_ONLY,
    RANDOM,
    SCRIPTED_KINDS,
    AnswerImmediatelyAgent,
    PlannerOnlyAgent,
    RandomAgent,
    learner_only_policy,
    scripted_policy,
)
from .train import CurvePoint, DivergenceError, TrainConfig, TrainResult, evaluate, success_rate, train, write_curve
