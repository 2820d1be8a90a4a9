"""Direct controllers invoked by the meta-controller."""

from .base import BUDGET, FAILURE, SUCCESS, ControllerResult, act, look
from .motion import EXPLORE_LAMBDA, NAV_BUDGET, SCAN_PITCHES, choose_view, explore, goal_poses, navigate, novelty, scan
from .oracle import oracle_length, oracle_run, seeded_knowledge
from .planner import (
    PLANNER_BUDGET,
    PlannerControllerConfig,
    execute_ground_action,
    goal_function,
    run_planner_controller,
    subject_tracked,
)
from .stopper import answer_question, stop_and_answer
