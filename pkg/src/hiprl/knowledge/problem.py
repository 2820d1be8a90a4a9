"""Compile a knowledge state plus a goal into a planning problem."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..pddl import load_domain
from ..pddl.grounding import GroundTask, ground, rebind, static_predicates
from ..pddl.syntax import Atom, FuncTerm, NumericAssignment, Param, Problem
from ..world.scene import CAN_CONTAIN, OBJECT_CLASSES, RECEPTACLE_CLASSES
from .geometry import Pose, PoseGraph
from .goals import GoalSpec, type_name
from .state import KnowledgeState

AGENT = "agent0"


@dataclass
class ProblemBinding:
    """How PDDL object names map back onto knowledge records and poses."""

    poses: dict[str, Pose] = field(default_factory=dict)
    receptacles: dict[str, int] = field(default_factory=dict)
    objects: dict[str, int] = field(default_factory=dict)
    agent_location: str = ""


def pose_graph(k: KnowledgeState) -> PoseGraph:
    cached = k._dist_cache.get("graph")
    if cached is not None and cached[0] == k.map_version:
        return cached[1]
    g = PoseGraph(k.grid)
    k._dist_cache.clear()
    k._dist_cache["graph"] = (k.map_version, g)
    return g


def pose_distances(k: KnowledgeState, sources: list[Pose]) -> np.ndarray:
    """Rows of pose-space costs from each source, cached per map version."""
    g = pose_graph(k)
    missing = [p for p in sources if ("d", p) not in k._dist_cache]
    if missing:
        rows = g.distances(missing)
        for p, row in zip(missing, rows):
            k._dist_cache[("d", p)] = row
    return np.array([k._dist_cache[("d", p)] for p in sources])


def to_pddl_problem(k: KnowledgeState, goal: GoalSpec, name: str = "episode") -> tuple[Problem, ProblemBinding]:
    """Believed atoms over one location per known receptacle plus the agent's pose."""
    binding = ProblemBinding()
    here: Pose = (tuple(k.agent), k.heading)
    g = pose_graph(k)
    from_here = pose_distances(k, [here])[0]

    reps = []
    for r in k.representatives():
        pose = k.receptacle_access(r)
        if pose is None or not np.isfinite(from_here[g.index(pose)]):
            continue
        reps.append((r, pose))

    loc_of_pose: dict[Pose, str] = {}
    for r, pose in reps:
        loc_of_pose.setdefault(pose, f"loc{r.rid}")
    if here not in loc_of_pose:
        loc_of_pose[here] = "locAgent"
    binding.agent_location = loc_of_pose[here]
    binding.poses = {name_: pose for pose, name_ in loc_of_pose.items()}

    objects = [Param(AGENT, "agent")]
    objects += [Param(n, "location") for n in sorted(binding.poses)]
    init: list[Atom] = [Atom("atLocation", (AGENT, binding.agent_location))]
    rec_name_at: dict = {}
    for r, pose in reps:
        rn = f"rec{r.rid}"
        binding.receptacles[rn] = r.rid
        rec_name_at[r.anchor] = rn
        objects.append(Param(rn, "receptacle"))
        init.append(Atom("receptacleAtLocation", (rn, loc_of_pose[pose])))
        init.append(Atom("receptacleType", (rn, type_name(r.cls))))
        if r.openable:
            init.append(Atom("openable", (rn,)))
        if any(x.opened for x in k.colocated(r.rid)):
            init.append(Atom("opened", (rn,)))
        if any(x.checked for x in k.colocated(r.rid)):
            init.append(Atom("checked", (rn,)))

    full: set[str] = set()
    for o in sorted(k.objects, key=lambda o: o.tid):
        on = f"obj{o.tid}"
        if o.tid == k.held:
            binding.objects[on] = o.tid
            objects.append(Param(on, "object"))
            init += [Atom("objectType", (on, type_name(o.cls))), Atom("holds", (AGENT, on)), Atom("holdsAny", (AGENT,))]
            continue
        rn = None
        if o.containment is not None:
            try:
                rn = rec_name_at.get(k.receptacle(o.containment).anchor)
            except KeyError:
                rn = None
        binding.objects[on] = o.tid
        objects.append(Param(on, "object"))
        init.append(Atom("objectType", (on, type_name(o.cls))))
        if rn is not None:
            rpose = binding.poses[_loc_of(init, rn)]
            init.append(Atom("inReceptacle", (on, rn)))
            init.append(Atom("objectAtLocation", (on, loc_of_pose[rpose])))
            full.add(rn)
    init += [Atom("full", (rn,)) for rn in sorted(full)]

    objects += [Param(type_name(c), "rtype") for c in RECEPTACLE_CLASSES]
    objects += [Param(type_name(c), "otype") for c in OBJECT_CLASSES]
    for rc, ocs in CAN_CONTAIN.items():
        init += [Atom("canContain", (type_name(rc), type_name(oc))) for oc in ocs]

    numeric = [NumericAssignment(FuncTerm("totalCost"), 0)]
    names = sorted(binding.poses)
    poses = [binding.poses[n] for n in names]
    rows = pose_distances(k, poses)
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if i != j:
                d = rows[i][g.index(poses[j])]
                numeric.append(NumericAssignment(FuncTerm("distance", (a, b)), _num(d)))
    problem = Problem(name, "qa_vsp_task", tuple(objects), tuple(init), tuple(numeric), goal.formula,
                      ("minimize", FuncTerm("totalCost")))
    return problem, binding


def _loc_of(init: list[Atom], rec_name: str) -> str:
    for a in init:
        if a.predicate == "receptacleAtLocation" and a.terms[0] == rec_name:
            return a.terms[1]
    raise KeyError(rec_name)


def _num(d: float):
    d = float(d)
    if not np.isfinite(d):
        raise ValueError("unreachable location pair in emitted problem")
    return int(d) if d.is_integer() else d


_GROUND_CACHE: "OrderedDict[tuple, GroundTask]" = OrderedDict()
_GROUND_CACHE_SIZE = 64


def ground_problem(problem: Problem, cache: bool = True) -> GroundTask:
    """Ground an emitted problem, reusing an earlier grounding with the same structure."""
    domain = load_domain()
    if not cache:
        return ground(domain, problem)
    statics = static_predicates(domain)
    key = (problem.objects, frozenset(a for a in problem.init if a.predicate in statics), problem.goal)
    hit = _GROUND_CACHE.get(key)
    if hit is None:
        task = ground(domain, problem)
        _GROUND_CACHE[key] = task
        if len(_GROUND_CACHE) > _GROUND_CACHE_SIZE:
            _GROUND_CACHE.popitem(last=False)
        return task
    _GROUND_CACHE.move_to_end(key)
    return rebind(hit, problem)
