"""Relaxed planning graph, FF heuristic, hill-climbing, best-first fallback and validation."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiprl.pddl import holds
from hiprl.planner import (
    INF,
    Outcome,
    PlannerConfig,
    build_rpg,
    enforced_hill_climb,
    ff_heuristic,
    greedy_best_first,
    plan,
    validate,
)

from helpers import ground_text, problem_text
from instances import exhaustive, random_task


def two_rooms(openable=False, goal="(checked d)", at="l1"):
    objects = [("a", "agent"), ("l1", "location"), ("l2", "location"), ("d", "receptacle"), ("MugType", "otype")]
    init = [f"(atLocation a {at})", "(receptacleAtLocation d l2)"] + (["(openable d)"] if openable else [])
    return ground_text(problem_text(objects, init, goal, ("l1", "l2")))


def drawers(n=3, mug=False, goal=None):
    objects = [("a", "agent"), ("l0", "location"), ("DrawerType", "rtype"), ("MugType", "otype")]
    init = ["(atLocation a l0)", "(canContain DrawerType MugType)"]
    locs = ["l0"]
    for i in range(n):
        objects += [(f"l{i + 1}", "location"), (f"d{i}", "receptacle")]
        locs.append(f"l{i + 1}")
        init += [f"(receptacleAtLocation d{i} l{i + 1})", f"(openable d{i})", f"(receptacleType d{i} DrawerType)"]
    if mug:
        objects.append(("m", "object"))
        init += ["(objectType m MugType)", "(inReceptacle m d0)", "(objectAtLocation m l1)"]
    if goal is None:
        goal = """(or (exists (?o - object) (objectType ?o MugType))
          (and (forall (?t - rtype) (forall (?r - receptacle)
                  (or (not (and (canContain ?t MugType) (receptacleType ?r ?t))) (checked ?r))))
               (forall (?re - receptacle) (not (opened ?re)))))"""
    return ground_text(problem_text(objects, init, goal, locs))


def _fact(t, pred, *args):
    return t.fluent_index[(pred, args)]


# -- relaxed planning graph ------------------------------------------------------


def test_rpg_goal_at_level_zero():
    t = two_rooms(goal="(atLocation a l1)")
    g = build_rpg(t, t.init.bits)
    assert g.goal_level == 0


def test_rpg_goto_checks_unopenable_at_level_one():
    t = two_rooms()
    g = build_rpg(t, t.init.bits, stop_at_goal=False)
    assert g.fact_level[_fact(t, "atLocation", "a", "l2")] == 1
    assert g.fact_level[_fact(t, "checked", "d")] == 1


def test_rpg_unreachable_goal():
    t = two_rooms(goal="(exists (?o - object) (objectType ?o MugType))")
    assert not build_rpg(t, t.init.bits).reached_goal


def test_rpg_layers_monotone():
    t = drawers()
    g = build_rpg(t, t.init.bits, stop_at_goal=False)
    for a, b in zip(g.fact_layers, g.fact_layers[1:]):
        assert a <= b
    assert len(g.fact_layers) <= len(t.fluents) + 1


# -- heuristic -------------------------------------------------------------------


def test_h_zero_on_goal_state():
    t = two_rooms(goal="(atLocation a l1)")
    r = ff_heuristic(t, t.init.bits)
    assert r.h == 0 and r.relaxed_plan == []


def test_h_one_for_open_at_drawer():
    t = two_rooms(openable=True, at="l2")
    r = ff_heuristic(t, t.init.bits)
    assert r.h == 1
    assert [t.actions[i].label() for _, i in r.relaxed_plan] == ["(OpenObject a l2 d)"]
    assert [t.actions[i].label() for i in r.helpful] == ["(OpenObject a l2 d)"]


def test_h_infinite_when_unreachable():
    t = two_rooms(goal="(exists (?o - object) (objectType ?o MugType))")
    assert ff_heuristic(t, t.init.bits).h == INF


# -- search ------------------------------------------------------------------------


def test_trivial_goal_empty_plan():
    t = two_rooms(goal="(atLocation a l1)")
    for r in (enforced_hill_climb(t), greedy_best_first(t), plan(t)):
        assert r.found and r.plan.actions == [] and r.plan.cost == 0


def test_three_drawer_question():
    t = drawers()
    r = plan(t)
    assert r.found
    report = validate(t, r.plan)
    assert report.valid
    labels = r.plan.lines()
    for i in range(3):
        assert f"(OpenObject a l{i + 1} d{i})" in labels
        assert f"(CloseObject a l{i + 1} d{i})" in labels
    # one drawer open at a time
    opened = 0
    for a in r.plan.actions:
        opened += {"OpenObject": 1, "CloseObject": -1}.get(a.name, 0)
        assert 0 <= opened <= 1
    opt, _ = exhaustive(t)
    assert report.cost <= 2 * opt


def test_mug_must_exist_is_impossible():
    t = drawers(goal="(exists (?o - object) (objectType ?o MugType))")
    r = plan(t)
    assert r.outcome is Outcome.IMPOSSIBLE
    assert exhaustive(t)[0] is None


def test_gbfs_node_budget():
    t = drawers()
    assert greedy_best_first(t, node_budget=1).outcome is Outcome.EXHAUSTED


def test_impossible_never_exhausted():
    t = drawers(goal="(exists (?o - object) (objectType ?o MugType))")
    assert plan(t, PlannerConfig(node_budget=1)).outcome is Outcome.IMPOSSIBLE


def test_fallback_after_ehc_stalls():
    t = drawers()
    r = plan(t, PlannerConfig(plateau_limit=1))
    assert r.found and r.stats.method in ("ehc", "ehc+gbfs")
    assert validate(t, r.plan).valid
    g = plan(t, PlannerConfig(ehc_enabled=False))
    assert g.stats.method == "gbfs" and validate(t, g.plan).valid


# -- validation --------------------------------------------------------------------


def test_validate_empty_plan():
    t = two_rooms(goal="(atLocation a l1)")
    rep = validate(t, [])
    assert rep.valid and rep.cost == 0


def test_validate_detects_missing_step():
    t = drawers()
    actions = plan(t).plan.actions
    i = next(k for k, a in enumerate(actions) if a.name == "OpenObject")
    broken = actions[:i] + actions[i + 1:]
    rep = validate(t, broken)
    assert not rep.valid
    assert rep.failed_step is not None
    assert "opened" in rep.message


# -- properties over random instances -----------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_h_zero_iff_goal(seed):
    t = random_task(seed)
    r = ff_heuristic(t, t.init.bits)
    assert (r.h == 0) == holds(t.init, t.goal)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_plans_valid_and_infinite_h_sound(seed):
    t = random_task(seed)
    r = plan(t)
    if r.found:
        assert validate(t, r.plan).valid
    if ff_heuristic(t, t.init.bits).h == INF:
        res = exhaustive(t, 20_000)
        if res is not None:
            assert res[0] is None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_plan_deterministic(seed):
    a, b = plan(random_task(seed)), plan(random_task(seed))
    assert a.outcome == b.outcome
    assert a.stats.counters() == b.stats.counters()
    if a.found:
        assert a.plan.lines() == b.plan.lines()


@pytest.mark.parametrize("seed", range(5))
def test_gbfs_solves_what_ehc_solves(seed):
    t = random_task(seed + 17)
    e = enforced_hill_climb(t)
    if e.found:
        g = greedy_best_first(t)
        assert g.found and validate(t, g.plan).valid
