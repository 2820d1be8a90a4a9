"""Random small planning instances and an exhaustive-search oracle."""

import heapq
import random

from hiprl.knowledge.goals import goal_for_task, search_goal_for_vsp
from hiprl.pddl import eval_formula, format_node, successor_bits
from hiprl.world.tasks import CONTAINMENT, COUNTING, EXISTENCE, PUT_IN, TaskSpec

from helpers import ground_text, problem_text

RTYPES = {"Cabinet": True, "Fridge": True, "Sink": False, "CounterTop": False}
OTYPES = ("Mug", "Apple")


def random_instance(seed: int, max_locations: int = 4, max_receptacles: int = 3, max_objects: int = 2) -> str:
    """Problem text over the shipped domain: a few locations, receptacles and objects, one goal."""
    rnd = random.Random(seed)
    n_loc = rnd.randint(2, max_locations)
    locs = [f"l{i}" for i in range(n_loc)]
    n_rec = rnd.randint(1, max_receptacles)
    recs = [(f"r{i}", rnd.choice(sorted(RTYPES)), rnd.choice(locs)) for i in range(n_rec)]
    objects = [("a", "agent")] + [(l, "location") for l in locs] + [(r, "receptacle") for r, _, _ in recs]
    objects += [(f"{t}Type", "rtype") for t in RTYPES] + [(f"{t}Type", "otype") for t in OTYPES]
    init = [f"(atLocation a {rnd.choice(locs)})"]
    for r, t, loc in recs:
        init += [f"(receptacleAtLocation {r} {loc})", f"(receptacleType {r} {t}Type)"]
        if RTYPES[t]:
            init.append(f"(openable {r})")
    for t in RTYPES:
        for o in OTYPES:
            if rnd.random() < 0.7:
                init.append(f"(canContain {t}Type {o}Type)")
    opened = [r for r, t, _ in recs if RTYPES[t]]
    if opened and rnd.random() < 0.3:
        init.append(f"(opened {rnd.choice(opened)})")
    for i in range(rnd.randint(0, max_objects)):
        o, t = f"o{i}", rnd.choice(OTYPES)
        r, _, loc = rnd.choice(recs)
        objects.append((o, "object"))
        init += [f"(objectType {o} {t}Type)", f"(inReceptacle {o} {r})", f"(objectAtLocation {o} {loc})"]
    kind = rnd.choice([EXISTENCE, COUNTING, CONTAINMENT, PUT_IN, "search"])
    subject, target = rnd.choice(OTYPES), rnd.choice(sorted(RTYPES))
    task = TaskSpec("x", PUT_IN if kind == "search" else kind, "s", subject, target)
    spec = search_goal_for_vsp(task) if kind == "search" else goal_for_task(task)
    dists = {(a, b): rnd.randint(1, 5) for a in locs for b in locs if a != b}
    text = problem_text(objects, init, format_node(spec.formula), locs, distance=1)
    # replace the uniform distances with random ones
    for (a, b), d in dists.items():
        text = text.replace(f"(= (distance {a} {b}) 1)", f"(= (distance {a} {b}) {d})")
    return text


def random_task(seed: int, **kwargs):
    return ground_text(random_instance(seed, **kwargs))


def exhaustive(task, limit: int = 50_000):
    """Uniform-cost search over the full state space.

    Returns (optimal cost or None, number of states reached), or None when the
    reachable space exceeds ``limit``.
    """
    start = task.init.bits
    best = {start: 0.0}
    heap = [(0.0, 0, start)]
    tick = 0
    found = None
    while heap:
        g, _, bits = heapq.heappop(heap)
        if g > best[bits]:
            continue
        if found is None and eval_formula(task.goal, bits):
            found = g
        for a in task.actions:
            if a.applicable(bits):
                nb = successor_bits(a, bits)
                ng = g + a.cost
                if nb not in best or ng < best[nb]:
                    if nb not in best and len(best) >= limit:
                        return None
                    best[nb] = ng
                    tick += 1
                    heapq.heappush(heap, (ng, tick, nb))
    return found, len(best)


def enumerable_instances(n: int, limit: int = 50_000, start: int = 0):
    """First ``n`` random instances whose full state space has at most ``limit`` states."""
    out = []
    seed = start
    while len(out) < n:
        task = random_task(seed)
        res = exhaustive(task, limit)
        if res is not None:
            out.append((seed, task, res[0], res[1]))
        seed += 1
    return out
