"""Partially observable grid kitchen: scenes, primitive actions, detection, tasks."""

from .detect import Detection, NoiseModel, NoiseRecord, detect, visible_entities
from .io import FormatError, load_scenes, load_tasks, loads_scenes, loads_tasks, save_scenes, save_tasks
from .scene import (
    CAN_CONTAIN,
    HEADINGS,
    OBJECT_CLASSES,
    OPENABLE_CLASSES,
    PITCH_RANGE,
    RECEPTACLE_CLASSES,
    InfeasibleSceneError,
    Receptacle,
    Scene,
    SceneConfig,
    SmallObject,
    access_pose,
    can_contain,
    frustum_cells,
    generate_scene,
    rng_stream,
)
from .sim import Env, Observation, PrimitiveAction, WorldState, step, transition
from .tasks import (
    CONTAINMENT,
    COUNTING,
    EXISTENCE,
    IQA_KINDS,
    PUT_IN,
    TASK_KINDS,
    NoValidTaskError,
    TaskSpec,
    answer_for,
    generate_task,
    vsp_goal_met,
)


def shortest_path_estimate(scene: Scene, task: TaskSpec, **kwargs) -> int:
    """Oracle episode length: planner loop with every receptacle position known up front."""
    from ..controllers.oracle import oracle_length

    return oracle_length(scene, task, **kwargs)
