"""Small builders shared by the test modules."""

from itertools import permutations

from hiprl.pddl import ground, load_domain, parse_problem


def problem_text(objects, init=(), goal="(and)", locations=(), distance=1):
    """Problem over the shipped domain; every ordered location pair gets ``distance``."""
    objs = " ".join(f"{name} - {typ}" for name, typ in objects)
    facts = list(init)
    facts += [f"(= (distance {a} {b}) {distance})" for a, b in permutations(locations, 2)]
    facts.append("(= (totalCost) 0)")
    return (
        "(define (problem p) (:domain qa_vsp_task)\n"
        f"  (:objects {objs})\n"
        f"  (:init {' '.join(facts)})\n"
        f"  (:goal {goal})\n"
        "  (:metric minimize (totalCost)))\n"
    )


def ground_text(text, **kwargs):
    domain = load_domain()
    return ground(domain, parse_problem(text, domain), **kwargs)


def kitchen(openable=True, extra_init=(), goal="(and)"):
    """One agent, two locations, receptacle r at l2 and a mug on the counter c at l1."""
    objects = [("a", "agent"), ("l1", "location"), ("l2", "location"), ("r", "receptacle"), ("c", "receptacle"),
               ("o", "object"), ("CabinetType", "rtype"), ("CounterTopType", "rtype"), ("MugType", "otype")]
    init = ["(atLocation a l1)", "(receptacleAtLocation r l2)", "(receptacleAtLocation c l1)",
            "(objectAtLocation o l1)", "(inReceptacle o c)", "(receptacleType r CabinetType)",
            "(receptacleType c CounterTopType)", "(objectType o MugType)", "(canContain CabinetType MugType)",
            "(canContain CounterTopType MugType)"]
    if openable:
        init.append("(openable r)")
    return problem_text(objects, init + list(extra_init), goal, ("l1", "l2"), distance=3)


def by_label(task, label):
    return next(a for a in task.actions if a.label() == label)


def room(receptacles=(), objects=(), width=7, height=5, split="train", name="room"):
    """Walled rectangle; ``receptacles`` as (id, type, cell, openable), ``objects`` as (id, type, place)."""
    from hiprl.world.scene import Receptacle, Scene, SmallObject

    walls = frozenset((x, y) for x in range(width) for y in range(height)
                      if x in (0, width - 1) or y in (0, height - 1))
    recs = tuple(Receptacle(i, t, c, o) for i, t, c, o in receptacles)
    objs = tuple(SmallObject(i, t, p) if isinstance(p, str) else SmallObject(i, t, None, p) for i, t, p in objects)
    return Scene(width, height, walls, recs, objs, 0, split, name)
