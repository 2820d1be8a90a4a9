"""Predicate image of a WorldState and co-simulation against the domain.

Every agent pose is a location; each receptacle sits at the pose that faces
it from its access cell (same rule the knowledge state uses).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .scene import CAN_CONTAIN, access_pose
from .sim import CLOSE, MOVE_AHEAD, OPEN, PICKUP, PUT, ROTATE_LEFT, ROTATE_RIGHT, PrimitiveAction, WorldState, step

AGENT = "agent0"
# image predicates the simulator realises; `checked` is epistemic and has no physical image
IMAGE_PREDICATES = frozenset({"atLocation", "opened", "inReceptacle", "holds", "holdsAny", "full"})


def pose_location(pose) -> str:
    (x, y), h = pose
    return f"L_{x}_{y}_{h}"


def receptacle_locations(scene) -> dict[str, str]:
    out = {}
    for r in scene.receptacles:
        pose = access_pose(r.cell, lambda c: not scene.blocked(c))
        if pose is not None:
            out[r.id] = pose_location(pose)
    return out


def predicate_image(state: WorldState, rec_loc: Optional[dict] = None) -> set:
    scene = state.scene
    rec_loc = rec_loc if rec_loc is not None else receptacle_locations(scene)
    atoms = {("atLocation", (AGENT, pose_location((state.agent, state.heading))))}
    for r in scene.receptacles:
        atoms.add(("receptacleType", (r.id, r.rtype + "Type")))
        if r.openable:
            atoms.add(("openable", (r.id,)))
        if r.id in rec_loc:
            atoms.add(("receptacleAtLocation", (r.id, rec_loc[r.id])))
        if len(state.contents(r.id)) >= r.capacity:
            atoms.add(("full", (r.id,)))
    for rid in state.opened:
        atoms.add(("opened", (rid,)))
    for o in scene.objects:
        atoms.add(("objectType", (o.id, o.otype + "Type")))
    for oid, place in state.containment:
        if isinstance(place, str):
            atoms.add(("inReceptacle", (oid, place)))
            if place in rec_loc:
                atoms.add(("objectAtLocation", (oid, rec_loc[place])))
    if state.held is not None:
        atoms.add(("holds", (AGENT, state.held)))
        atoms.add(("holdsAny", (AGENT,)))
    for rtype, otypes in CAN_CONTAIN.items():
        for ot in otypes:
            atoms.add(("canContain", (rtype + "Type", ot + "Type")))
    return atoms


def image_universe(state: WorldState, atoms: set) -> dict[str, list]:
    scene = state.scene
    return {
        "agent": [AGENT],
        "receptacle": [r.id for r in scene.receptacles],
        "object": [o.id for o in scene.objects],
        "rtype": sorted({t for p, args in atoms if p == "canContain" for t in args[:1]}),
        "otype": sorted({t for p, args in atoms if p == "canContain" for t in args[1:]}),
        "location": sorted({args[-1] for p, args in atoms if p in ("atLocation", "receptacleAtLocation")}),
    }


def lift(pre: WorldState, post: WorldState, action: PrimitiveAction) -> Optional[tuple[str, tuple[str, ...]]]:
    """Domain action corresponding to a primitive, or None if it has no counterpart."""
    here = pose_location((pre.agent, pre.heading))
    if action.kind in (MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT):
        there = pose_location((post.agent, post.heading))
        return None if there == here else ("GotoLocation", (AGENT, here, there))
    if action.kind == OPEN:
        return ("OpenObject", (AGENT, here, action.target))
    if action.kind == CLOSE:
        return ("CloseObject", (AGENT, here, action.target))
    if action.kind == PICKUP:
        try:
            place = pre.place_of(action.target)
        except KeyError:
            return None
        return ("PickupObject", (AGENT, here, action.target, place)) if isinstance(place, str) else None
    if action.kind == PUT:
        if pre.held is None:
            return None
        return ("PutObject", (AGENT, here, pre.scene.obj(pre.held).otype + "Type", pre.held, action.target))
    return None


@dataclass
class CosimReport:
    steps: int = 0
    lifted: int = 0
    applied: int = 0
    violations: list[str] = field(default_factory=list)


def random_primitive(state: WorldState, rng: np.random.Generator) -> PrimitiveAction:
    """Mostly meaningful primitives, with some deliberately illegal ones."""
    faced = state.facing_receptacle()
    r = rng.random()
    if r < 0.35:
        return PrimitiveAction(MOVE_AHEAD)
    if r < 0.5:
        return PrimitiveAction(ROTATE_LEFT)
    if r < 0.65:
        return PrimitiveAction(ROTATE_RIGHT)
    rids = [rec.id for rec in state.scene.receptacles]
    target = faced.id if faced is not None and rng.random() < 0.8 else rids[int(rng.integers(len(rids)))]
    if r < 0.75:
        return PrimitiveAction(OPEN, target)
    if r < 0.82:
        return PrimitiveAction(CLOSE, target)
    if r < 0.92:
        inside = state.contents(target)
        pool = inside if inside and rng.random() < 0.8 else [o.id for o in state.scene.objects]
        return PrimitiveAction(PICKUP, pool[int(rng.integers(len(pool)))])
    return PrimitiveAction(PUT, target)


def cosimulate(state: WorldState, actions, domain, report: Optional[CosimReport] = None) -> CosimReport:
    """Check each lifted primitive against the domain schema.

    A violation is either a primitive that fails although its counterpart's
    precondition holds in the image, or a successful one whose post-image
    contradicts the counterpart's declared add/delete effects.
    """
    from ..pddl.lifted import applicable, effect_lists

    report = report or CosimReport()
    rec_loc = receptacle_locations(state.scene)
    for a in actions:
        if callable(a):
            a = a(state)
        pre_atoms = predicate_image(state, rec_loc)
        new, obs = step(state, a)
        report.steps += 1
        lifted = lift(state, new, a)
        if lifted is not None:
            report.lifted += 1
            name, args = lifted
            schema = domain.action(name)
            universe = image_universe(state, pre_atoms)
            universe["location"] = sorted(set(universe["location"]) | {args[1]} | ({args[2]} if name == "GotoLocation" else set()))
            if applicable(schema, args, pre_atoms, universe):
                report.applied += 1
                if not obs.success:
                    report.violations.append(f"step {report.steps}: {name}{args} applicable but primitive {a} failed")
                else:
                    post_atoms = predicate_image(new, rec_loc)
                    binding = {p.name: v for p, v in zip(schema.params, args)}
                    add, delete = effect_lists(schema.effect, binding, pre_atoms, universe)
                    for atom in add:
                        if atom[0] in IMAGE_PREDICATES and atom not in post_atoms:
                            report.violations.append(f"step {report.steps}: {name}{args} should add {atom}")
                    for atom in delete - add:
                        if atom[0] in IMAGE_PREDICATES and atom in post_atoms:
                            report.violations.append(f"step {report.steps}: {name}{args} should delete {atom}")
        state = new
    return report
