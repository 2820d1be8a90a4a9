"""Shared knowledge state and its compilation to planning problems."""

from .geometry import PoseGraph, cell_bfs_distance, primitive_between
from .goals import (
    IQA_CHECK,
    VSP_PUT_IN,
    GoalSpec,
    goal_for_question,
    goal_for_task,
    goal_for_vsp,
    search_goal_for_vsp,
    type_name,
)
from .problem import ProblemBinding, ground_problem, pose_distances, pose_graph, to_pddl_problem
from .state import (
    BLOCKED,
    FREE,
    MERGE_IOU,
    UNKNOWN,
    KnowledgeState,
    ReceptacleRecord,
    TrackedDetection,
    box_cells,
    drop_object,
    iou,
    mark_arrival,
    mark_interaction,
    merge_detections,
    refute_receptacle,
    union_box,
    update_map,
)
