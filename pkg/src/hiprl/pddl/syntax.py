"""Abstract syntax for the ADL subset used by the household domain.

All nodes are frozen dataclasses holding tuples, so two parses of the same
text compare equal and can be hashed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Param:
    name: str
    type: Optional[str] = None  # None: untyped (only legal on function heads)


@dataclass(frozen=True)
class Atom:
    predicate: str
    terms: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate,) + self.terms) + ")"


@dataclass(frozen=True)
class And:
    parts: tuple = ()


@dataclass(frozen=True)
class Or:
    parts: tuple = ()


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Forall:
    params: tuple[Param, ...]
    body: object


@dataclass(frozen=True)
class Exists:
    params: tuple[Param, ...]
    body: object


@dataclass(frozen=True)
class FuncTerm:
    name: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class When:
    condition: object
    effect: object


@dataclass(frozen=True)
class Increase:
    target: FuncTerm
    amount: Union[FuncTerm, float, int]


Formula = Union[Atom, And, Or, Not, Forall, Exists]
Effect = Union[Atom, Not, And, Forall, When, Increase]


@dataclass(frozen=True)
class Predicate:
    name: str
    params: tuple[Param, ...] = ()


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[Param, ...] = ()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[Param, ...]
    precondition: object = field(default_factory=And)
    effect: object = field(default_factory=And)


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple[str, ...] = (":adl",)
    types: tuple[tuple[str, Optional[str]], ...] = ()
    predicates: tuple[Predicate, ...] = ()
    functions: tuple[Function, ...] = ()
    actions: tuple[ActionSchema, ...] = ()

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def supertypes(self, type_name: str) -> list[str]:
        """`type_name` followed by its ancestors."""
        parents = dict(self.types)
        chain = [type_name]
        while parents.get(chain[-1]) is not None:
            chain.append(parents[chain[-1]])
        return chain

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sup in self.supertypes(sub)


@dataclass(frozen=True)
class NumericAssignment:
    term: FuncTerm
    value: float


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[Param, ...] = ()
    init: tuple[Atom, ...] = ()
    numeric_init: tuple[NumericAssignment, ...] = ()
    goal: object = field(default_factory=And)
    metric: Optional[tuple[str, FuncTerm]] = None

    def objects_of(self, domain: Domain, type_name: str) -> list[str]:
        return [o.name for o in self.objects if domain.is_subtype(o.type, type_name)]


def free_variables(node, bound=frozenset()) -> set[str]:
    """Variables of a formula/effect not bound by an enclosing quantifier."""
    if isinstance(node, Atom):
        return {t for t in node.terms if t.startswith("?") and t not in bound}
    if isinstance(node, (And, Or)):
        out: set[str] = set()
        for p in node.parts:
            out |= free_variables(p, bound)
        return out
    if isinstance(node, Not):
        return free_variables(node.arg, bound)
    if isinstance(node, (Forall, Exists)):
        return free_variables(node.body, bound | {p.name for p in node.params})
    if isinstance(node, When):
        return free_variables(node.condition, bound) | free_variables(node.effect, bound)
    if isinstance(node, Increase):
        out = {a for a in node.target.args if a.startswith("?") and a not in bound}
        if isinstance(node.amount, FuncTerm):
            out |= {a for a in node.amount.args if a.startswith("?") and a not in bound}
        return out
    raise TypeError(f"not a formula node: {node!r}")


def rename_bound(node, mapping: Optional[dict] = None, counter: Optional[list] = None):
    """Alpha-normalise: rename quantified variables to ?v0, ?v1, ... in visit order."""
    mapping = dict(mapping or {})
    counter = counter if counter is not None else [0]
    if isinstance(node, Atom):
        return Atom(node.predicate, tuple(mapping.get(t, t) for t in node.terms))
    if isinstance(node, And):
        return And(tuple(rename_bound(p, mapping, counter) for p in node.parts))
    if isinstance(node, Or):
        return Or(tuple(rename_bound(p, mapping, counter) for p in node.parts))
    if isinstance(node, Not):
        return Not(rename_bound(node.arg, mapping, counter))
    if isinstance(node, (Forall, Exists)):
        params = []
        for p in node.params:
            fresh = f"?v{counter[0]}"
            counter[0] += 1
            mapping[p.name] = fresh
            params.append(Param(fresh, p.type))
        return type(node)(tuple(params), rename_bound(node.body, mapping, counter))
    raise TypeError(f"not a formula node: {node!r}")
