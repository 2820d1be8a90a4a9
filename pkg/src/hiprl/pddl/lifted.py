"""Direct evaluation of lifted formulas and effects over a set of ground atoms.

Independent of the grounder; used as an oracle and for co-simulation.
"""

from __future__ import annotations

from itertools import product
from typing import Mapping

from .syntax import And, Atom, Exists, Forall, Increase, Not, Or, When

GroundAtom = tuple[str, tuple[str, ...]]


def _ground_atom(atom: Atom, binding: Mapping[str, str]) -> GroundAtom:
    return (atom.predicate, tuple(binding.get(t, t) for t in atom.terms))


def _bindings(params, universe: Mapping[str, list], binding: Mapping[str, str]):
    pools = [universe.get(p.type, ()) for p in params]
    for combo in product(*pools):
        b = dict(binding)
        b.update({p.name: o for p, o in zip(params, combo)})
        yield b


def evaluate(formula, binding: Mapping[str, str], atoms: set, universe: Mapping[str, list]) -> bool:
    if isinstance(formula, Atom):
        return _ground_atom(formula, binding) in atoms
    if isinstance(formula, And):
        return all(evaluate(p, binding, atoms, universe) for p in formula.parts)
    if isinstance(formula, Or):
        return any(evaluate(p, binding, atoms, universe) for p in formula.parts)
    if isinstance(formula, Not):
        return not evaluate(formula.arg, binding, atoms, universe)
    if isinstance(formula, Forall):
        return all(evaluate(formula.body, b, atoms, universe) for b in _bindings(formula.params, universe, binding))
    if isinstance(formula, Exists):
        return any(evaluate(formula.body, b, atoms, universe) for b in _bindings(formula.params, universe, binding))
    raise TypeError(f"not a formula node: {formula!r}")


def effect_lists(effect, binding: Mapping[str, str], atoms: set, universe: Mapping[str, list]) -> tuple[set, set]:
    """(adds, deletes) of an effect, with `when` conditions read from ``atoms``."""
    add: set = set()
    delete: set = set()

    def visit(eff, b):
        if isinstance(eff, Atom):
            add.add(_ground_atom(eff, b))
        elif isinstance(eff, Not):
            delete.add(_ground_atom(eff.arg, b))
        elif isinstance(eff, And):
            for p in eff.parts:
                visit(p, b)
        elif isinstance(eff, Forall):
            for bb in _bindings(eff.params, universe, b):
                visit(eff.body, bb)
        elif isinstance(eff, When):
            if evaluate(eff.condition, b, atoms, universe):
                visit(eff.effect, b)
        elif isinstance(eff, Increase):
            pass
        else:
            raise TypeError(f"not an effect node: {eff!r}")

    visit(effect, binding)
    return add, delete


def successor(schema, args, atoms: set, universe: Mapping[str, list]) -> set:
    """Atom set after applying ``schema(args)``: deletes first, then adds."""
    binding = {p.name: a for p, a in zip(schema.params, args)}
    add, delete = effect_lists(schema.effect, binding, atoms, universe)
    return (set(atoms) - delete) | add


def applicable(schema, args, atoms: set, universe: Mapping[str, list]) -> bool:
    binding = {p.name: a for p, a in zip(schema.params, args)}
    return evaluate(schema.precondition, binding, atoms, universe)


def universe_of(domain, problem) -> dict[str, list]:
    """Objects per declared type, including subtypes."""
    return {t: problem.objects_of(domain, t) for t, _ in domain.types}
