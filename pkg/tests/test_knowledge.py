"""Knowledge state updates, goal encoders and problem compilation."""

import copy

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiprl.controllers import look, seeded_knowledge
from hiprl.knowledge import (
    BLOCKED,
    FREE,
    IQA_CHECK,
    UNKNOWN,
    VSP_PUT_IN,
    KnowledgeState,
    PoseGraph,
    box_cells,
    cell_bfs_distance,
    goal_for_question,
    goal_for_vsp,
    ground_problem,
    iou,
    mark_interaction,
    merge_detections,
    refute_receptacle,
    to_pddl_problem,
    update_map,
)
from hiprl.knowledge.state import mark_arrival
from hiprl.pddl import format_node, goal_example_text, load_domain, parse_goal, parse_problem, print_problem, rename_bound
from hiprl.planner import Outcome, plan
from hiprl.world import Detection, Env, NoiseModel, Observation, PrimitiveAction, generate_scene, rng_stream
from hiprl.world.cosim import random_primitive
from hiprl.world.tasks import CONTAINMENT, COUNTING, EXISTENCE, PUT_IN, TaskSpec

from helpers import room

_frame = iter(range(10**9))


def frame(*dets, visible=frozenset(), blocked=frozenset(), agent=(1, 1)):
    return Observation(agent, 0, frozenset(visible), tuple(dets), blocked=frozenset(blocked), frame=next(_frame))


def blank(w=24, h=8):
    return KnowledgeState.empty(w, h, (1, 1), 0)


# -- merging -----------------------------------------------------------------------


def test_identical_box_merges():
    k = blank()
    merge_detections(k, frame(Detection("Mug", (2, 2, 4, 3), "m")))
    merge_detections(k, frame(Detection("Mug", (2, 2, 4, 3), "m")))
    assert len(k.objects) == 1 and k.objects[0].support == 2


def test_disjoint_box_is_new():
    k = blank()
    merge_detections(k, frame(Detection("Mug", (2, 2, 3, 3), "m")))
    merge_detections(k, frame(Detection("Mug", (5, 5, 6, 6), "n")))
    assert len(k.objects) == 2


def test_iou_point_four_merges_to_union():
    a, b = (0, 0, 7, 1), (3, 0, 10, 1)
    assert iou(a, b) == pytest.approx(0.4)
    k = blank()
    merge_detections(k, frame(Detection("Mug", a, "m")))
    merge_detections(k, frame(Detection("Mug", b, "m")))
    assert len(k.objects) == 1
    assert k.objects[0].box == (0, 0, 10, 1)


def test_iou_at_threshold_does_not_merge():
    a, b = (0, 0, 13, 1), (7, 0, 20, 1)
    assert iou(a, b) == 0.3
    k = blank()
    merge_detections(k, frame(Detection("Mug", a, "m")))
    merge_detections(k, frame(Detection("Mug", b, "m")))
    assert len(k.objects) == 2


def test_other_class_never_merges():
    k = blank()
    merge_detections(k, frame(Detection("Mug", (2, 2, 3, 3), "m")))
    merge_detections(k, frame(Detection("Apple", (2, 2, 3, 3), "a")))
    assert sorted(o.cls for o in k.objects) == ["Apple", "Mug"]


def test_merge_prefers_highest_iou():
    k = blank()
    merge_detections(k, frame(Detection("Mug", (0, 0, 4, 1), "m"), Detection("Mug", (6, 0, 10, 1), "n")))
    merge_detections(k, frame(Detection("Mug", (5, 0, 9, 1), "n")))
    assert [o.support for o in k.objects] == [1, 2]


boxes = st.tuples(st.integers(1, 20), st.integers(1, 6), st.integers(1, 3), st.integers(1, 2)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3]))
dets = st.lists(st.tuples(st.sampled_from(["Mug", "Apple", "Cabinet"]), boxes), max_size=6)


@settings(max_examples=80, deadline=None)
@given(st.lists(dets, min_size=1, max_size=5))
def test_merge_invariants(frames):
    k = blank()
    supports = {}
    for fd in frames:
        obs = frame(*[Detection(c, b, None) for c, b in fd])
        merge_detections(k, obs)
        twice = copy.deepcopy(k)
        merge_detections(twice, obs)  # the same frame again is a no-op
        assert [(o.tid, o.box, o.support) for o in twice.objects] == [(o.tid, o.box, o.support) for o in k.objects]
        assert [(r.rid, r.box, r.support) for r in twice.receptacles] == [(r.rid, r.box, r.support) for r in k.receptacles]
        for rec in list(k.objects) + list(k.receptacles):
            assert rec.support >= 1 and len(box_cells(rec.box)) >= 1
            key = ("o", rec.tid) if hasattr(rec, "tid") else ("r", rec.rid)
            assert rec.support >= supports.get(key, 1)
            supports[key] = rec.support


def test_false_positive_decays():
    k = blank()
    view = frozenset(box_cells((0, 0, 6, 6)))
    merge_detections(k, frame(Detection("Mug", (2, 2, 3, 3), None), visible=view))
    for _ in range(2):
        merge_detections(k, frame(visible=view))
        assert len(k.objects) == 1
    merge_detections(k, frame(visible=view))
    assert k.objects == []


# -- map -----------------------------------------------------------------------------


def test_empty_view_leaves_map():
    k = blank()
    before = k.grid.copy()
    update_map(k, frame())
    assert np.array_equal(before, k.grid)


def test_full_view_matches_scene():
    scene = generate_scene(4)
    k = KnowledgeState.empty(scene.width, scene.height, scene.floor_cells()[0], 0)
    allc = frozenset((x, y) for x in range(scene.width) for y in range(scene.height))
    update_map(k, frame(visible=allc, blocked={c for c in allc if scene.blocked(c)}, agent=scene.floor_cells()[0]))
    for x in range(scene.width):
        for y in range(scene.height):
            assert k.cell((x, y)) == (BLOCKED if scene.blocked((x, y)) else FREE)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 9), st.integers(0, 6))), st.sets(st.tuples(st.integers(0, 9), st.integers(0, 6))))
def test_partial_views_union(a, b):
    walls = {(x, y) for x in range(10) for y in range(7) if (x * 7 + y) % 5 == 0}
    k = KnowledgeState.empty(10, 7, (1, 1), 0)
    k.grid[1, 1] = UNKNOWN
    update_map(k, frame(visible=a, blocked=a & walls))
    before = k.grid.copy()
    update_map(k, frame(visible=b, blocked=b & walls))
    known = {(x, y) for x in range(10) for y in range(7) if k.cell((x, y)) != UNKNOWN}
    assert known == a | b
    assert np.all(k.grid[before != UNKNOWN] == before[before != UNKNOWN])  # never downgraded


# -- interactions ---------------------------------------------------------------------


def drawer_knowledge():
    s = room([("d", "Drawer", (3, 1), True), ("k", "Sink", (5, 1), False)], [("mug", "Mug", (2, 2))])
    return s, seeded_knowledge(s, (3, 2), 0)


def test_open_success_sets_opened_and_checked():
    _, k = drawer_knowledge()
    mark_interaction(k, PrimitiveAction("Open", "d"), True, record=0)
    r = k.receptacle(0)
    assert r.opened and r.checked
    mark_interaction(k, PrimitiveAction("Close", "d"), True, record=0)
    assert not r.opened and r.checked


def test_open_failure_changes_nothing():
    _, k = drawer_knowledge()
    before = copy.deepcopy(k.receptacles)
    mark_interaction(k, PrimitiveAction("Open", "d"), False, record=0)
    assert k.receptacles == before


def test_pickup_then_put_beliefs():
    s, k = drawer_knowledge()
    env = Env(s, (2, 3), 0, NoiseModel.gt(), rng_stream(0, "detector"))
    look(env, k)
    (mug,) = k.objects_of("Mug")
    mark_interaction(k, PrimitiveAction("Pickup", "mug"), True, tracked=mug.tid)
    assert k.held == mug.tid and mug.containment is None
    mark_interaction(k, PrimitiveAction("Put", "k"), True, record=1)
    assert k.held is None and mug.containment == 1


def test_arrival_at_sink_checks_it():
    s, k = drawer_knowledge()
    sink = k.receptacle(1)
    assert k.receptacle_access(sink) == ((4, 1), 1)
    mark_arrival(k)
    assert not sink.checked
    k.agent, k.heading = (4, 1), 1
    mark_arrival(k)
    assert sink.checked
    # a closed drawer is not checked by standing next to it
    k.agent, k.heading = k.receptacle_access(k.receptacle(0))
    mark_arrival(k)
    assert not k.receptacle(0).checked


def test_refuted_receptacle_drops_out():
    _, k = drawer_knowledge()
    refute_receptacle(k, 0)
    assert [r.rid for r in k.live_receptacles()] == [1]


# -- properties along real episodes ------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_gt_fidelity_and_monotonicity(seed):
    scene = generate_scene(seed % 200)
    rng = np.random.default_rng(seed)
    start = scene.floor_cells()[int(rng.integers(len(scene.floor_cells())))]
    env = Env(scene, start, 0, NoiseModel.gt(), rng_stream(seed, "detector"))
    k = KnowledgeState.empty(scene.width, scene.height, start, 0)
    seen_ids: set = set()
    known, checked = 0, 0
    for _ in range(40):
        a = random_primitive(env.state, rng)
        obs = env.step(a)
        update_map(k, obs)
        obs = look(env, k)
        seen_ids |= {d.entity_id for d in obs.detections}
        for cls in {o.cls for o in k.objects}:
            visible = {e for e in seen_ids if any(o.id == e and o.otype == cls for o in scene.objects)}
            assert len(k.objects_of(cls)) <= len(visible)
        for o in k.objects:
            place = env.state.place_of(o.handle)
            believed = None if o.containment is None else k.receptacle(o.containment).handle
            if env.state.held != o.handle:
                assert believed == place or (place is None and believed is None)
        assert k.known_cells() >= known and sum(r.checked for r in k.receptacles) >= checked
        known, checked = k.known_cells(), sum(r.checked for r in k.receptacles)


# -- goals -----------------------------------------------------------------------------


def q(kind, subject, target=None):
    return TaskSpec("q", kind, "s", subject, target)


def test_existence_goal_matches_template():
    domain = load_domain()
    ref = parse_goal(goal_example_text(), domain, {"MugType": "otype"})
    g = goal_for_question(q(EXISTENCE, "Mug"))
    assert g.kind == IQA_CHECK
    assert rename_bound(g.formula) == rename_bound(ref)


def test_existence_goal_for_other_class():
    text = format_node(goal_for_question(q(EXISTENCE, "Bowl")).formula)
    assert "BowlType" in text and "MugType" not in text and "canContain" in text


def test_containment_goal_only_about_target():
    text = format_node(goal_for_question(q(CONTAINMENT, "Mug", "Microwave")).formula)
    assert "MicrowaveType" in text and "canContain" not in text


def test_counting_goal_has_no_early_exit():
    text = format_node(goal_for_question(q(COUNTING, "Mug")).formula)
    assert "objectType" not in text and "checked" in text


def test_goal_kind_errors():
    with pytest.raises(ValueError):
        goal_for_question(q(PUT_IN, "Apple", "Sink"))
    with pytest.raises(ValueError):
        goal_for_vsp(q(EXISTENCE, "Apple"))


def test_vsp_goal_is_exists_exists():
    g = goal_for_vsp(q(PUT_IN, "Apple", "Sink"))
    text = format_node(g.formula)
    assert g.kind == VSP_PUT_IN
    assert text.count("exists") == 2 and "AppleType" in text and "SinkType" in text and "inReceptacle" in text


# -- problem compilation --------------------------------------------------------------------


def drawers_and_microwave():
    s = room([("d1", "Drawer", (2, 1), True), ("d2", "Drawer", (4, 1), True), ("d3", "Drawer", (6, 1), True),
              ("w", "Microwave", (7, 2), True)], width=9)
    return s, seeded_knowledge(s, (4, 3), 0)


def test_three_drawers_and_microwave_problem():
    _, k = drawers_and_microwave()
    problem, binding = to_pddl_problem(k, goal_for_question(q(EXISTENCE, "Bowl")))
    locations = [p.name for p in problem.objects if p.type == "location"]
    assert len(locations) == 5
    assert len(binding.receptacles) == 4
    assert "BowlType" in format_node(problem.goal)
    domain = load_domain()
    assert parse_problem(print_problem(problem), domain) == problem
    r = plan(ground_problem(problem))
    assert r.found
    assert sum(a.name == "OpenObject" for a in r.plan.actions) == 4  # bowls fit in drawers and microwaves


def test_empty_knowledge_vsp_is_impossible():
    k = KnowledgeState.empty(7, 5, (2, 2), 0)
    problem, binding = to_pddl_problem(k, goal_for_vsp(q(PUT_IN, "Apple", "Sink")))
    assert [p.name for p in problem.objects if p.type == "location"] == ["locAgent"]
    assert not binding.receptacles
    assert plan(ground_problem(problem)).outcome is Outcome.IMPOSSIBLE


def test_apple_already_in_sink_gives_empty_plan():
    s = room([("k", "Sink", (3, 1), False)], [("apple", "Apple", "k")])
    k = seeded_knowledge(s, (3, 2), 0)
    look(Env(s, (3, 2), 0, NoiseModel.gt(), rng_stream(0, "detector")), k)
    assert k.objects_of("Apple")[0].containment == 0
    problem, _ = to_pddl_problem(k, goal_for_vsp(q(PUT_IN, "Apple", "Sink")))
    r = plan(ground_problem(problem))
    assert r.found and r.plan.actions == []


def test_distances_penalise_unknown_cells():
    grid = np.full((3, 5), BLOCKED, dtype=np.int8)
    grid[1, 1:4] = [FREE, UNKNOWN, FREE]
    g = PoseGraph(grid)
    d = g.distances([((1, 1), 1)])[0]
    assert d[g.index(((3, 1), 1))] == 3 + 1
    grid[1, 2] = FREE
    d = PoseGraph(grid).distances([((1, 1), 1)])[0]
    assert d[g.index(((3, 1), 1))] == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_pose_distances_match_bfs(seed):
    scene = generate_scene(seed % 300)
    grid = np.array([[BLOCKED if scene.blocked((x, y)) else FREE for x in range(scene.width)]
                     for y in range(scene.height)], dtype=np.int8)
    g = PoseGraph(grid)
    rng = np.random.default_rng(seed)
    floor = scene.floor_cells()
    a = (floor[int(rng.integers(len(floor)))], int(rng.integers(4)))
    b = (floor[int(rng.integers(len(floor)))], int(rng.integers(4)))
    d = g.distances([a])[0][g.index(b)]
    assert d == cell_bfs_distance(lambda c: not scene.blocked(c), a, {b})


def test_grounding_cache_matches_fresh():
    _, k = drawers_and_microwave()
    goal = goal_for_question(q(EXISTENCE, "Bowl"))
    problem, _ = to_pddl_problem(k, goal)
    fresh = ground_problem(problem, cache=False)
    k.agent = (3, 3)
    moved, _ = to_pddl_problem(k, goal)
    ground_problem(problem)
    cached = ground_problem(moved)
    again = ground_problem(moved, cache=False)
    assert plan(cached).plan.lines() == plan(again).plan.lines()
    assert plan(fresh).found


def test_emitted_plans_execute_in_gt_world():
    """Every step of a plan for the emitted problem succeeds when carried out in the simulator."""
    from hiprl.controllers import execute_ground_action

    s, k = drawers_and_microwave()
    env = Env(s, (4, 3), 0, NoiseModel.gt(), rng_stream(0, "detector"))
    problem, binding = to_pddl_problem(k, goal_for_question(q(EXISTENCE, "Bowl")))
    r = plan(ground_problem(problem))
    for a in r.plan.actions:
        assert execute_ground_action(env, k, a, binding, nav_budget=200), a.label()
