"""Grounding of lifted schemas into a propositional task.

States are Python ints used as bitsets over the fluent index. Predicates that
never appear in an effect are static: they are evaluated against the initial
state while grounding and never become fluents. Fluents that occur negatively
in a precondition, effect condition or goal get a synthesized complement
fluent ``not-<pred>`` so that every planner-facing condition is a positive
conjunction (or, for goals, an and/or tree of positive literals).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .syntax import (
    ActionSchema,
    And,
    Atom,
    Domain,
    Exists,
    Forall,
    FuncTerm,
    Increase,
    Not,
    Or,
    Problem,
    When,
)

MAX_DNF_TERMS = 256


class GroundingError(ValueError):
    pass


class PreconditionViolation(ValueError):
    def __init__(self, action: "GroundAction", literal: str):
        self.action = action
        self.literal = literal
        super().__init__(f"{action.label()}: precondition {literal} does not hold")


# -- ground formulas -------------------------------------------------------
# Plain tuples keep evaluation fast: ("lit", i), ("nlit", i), ("and", [..]),
# ("or", [..]) plus the two constants below.

TRUE = ("true",)
FALSE = ("false",)


def _mk_and(parts: list) -> tuple:
    out = []
    for p in parts:
        if p is FALSE or p == FALSE:
            return FALSE
        if p == TRUE:
            continue
        if p[0] == "and":
            out.extend(p[1])
        else:
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return ("and", tuple(out))


def _mk_or(parts: list) -> tuple:
    out = []
    for p in parts:
        if p == TRUE:
            return TRUE
        if p == FALSE:
            continue
        if p[0] == "or":
            out.extend(p[1])
        else:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return ("or", tuple(out))


def eval_formula(formula: tuple, bits: int) -> bool:
    tag = formula[0]
    if tag == "lit":
        return bool(bits >> formula[1] & 1)
    if tag == "nlit":
        return not bits >> formula[1] & 1
    if tag == "and":
        return all(eval_formula(p, bits) for p in formula[1])
    if tag == "or":
        return any(eval_formula(p, bits) for p in formula[1])
    return tag == "true"


def formula_literals(formula: tuple) -> set[int]:
    tag = formula[0]
    if tag in ("lit", "nlit"):
        return {formula[1]}
    if tag in ("and", "or"):
        out: set[int] = set()
        for p in formula[1]:
            out |= formula_literals(p)
        return out
    return set()


# -- task structures -------------------------------------------------------


@dataclass(frozen=True)
class State:
    bits: int
    cost: float = 0.0

    def has(self, index: int) -> bool:
        return bool(self.bits >> index & 1)


@dataclass(frozen=True)
class ConditionalEffect:
    condition: tuple[int, ...]
    cond_mask: int
    add: int
    delete: int


@dataclass
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: tuple[int, ...]
    pre_mask: int
    add: int
    delete: int
    conditional: tuple[ConditionalEffect, ...]
    cost: float
    variant: int = 0

    def label(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"

    @property
    def sort_key(self) -> tuple:
        return (self.name, self.args, self.variant)

    def applicable(self, bits: int) -> bool:
        return bits & self.pre_mask == self.pre_mask


@dataclass
class GroundTask:
    domain: Domain
    problem: Problem
    fluents: list[tuple[str, tuple[str, ...]]]
    fluent_index: dict[tuple[str, tuple[str, ...]], int]
    complement_of: dict[int, int]
    actions: list[GroundAction]
    init: State
    goal: tuple
    statics: frozenset
    notes: list[str] = field(default_factory=list)
    unpruned: Optional[list] = field(default=None, repr=False)  # action list before reachability pruning

    def fluent_name(self, index: int) -> str:
        pred, args = self.fluents[index]
        return "(" + " ".join((pred,) + args) + ")"

    def atoms(self, state: State, include_complements: bool = False) -> set[tuple[str, tuple[str, ...]]]:
        out = set()
        for i, f in enumerate(self.fluents):
            if state.bits >> i & 1 and (include_complements or not f[0].startswith("not-")):
                out.add(f)
        return out

    def ground_formula(self, formula, binding: Optional[dict] = None) -> tuple:
        """Ground an extra formula (not seen at grounding time) against this task."""
        g = _Grounder(self.domain, self.problem, self.fluent_index, self.fluents, self.statics, create=False)
        return _compile_negations(g.formula(formula, binding or {}, positive=True), self.complement_of)

    def state_from_atoms(self, atoms: Iterable[tuple[str, tuple[str, ...]]], cost: float = 0.0) -> State:
        bits = 0
        for atom in atoms:
            if atom in self.fluent_index:
                bits |= 1 << self.fluent_index[atom]
        for pos, comp in self.complement_of.items():
            if not bits >> pos & 1:
                bits |= 1 << comp
        return State(bits, cost)

    def dump(self) -> str:
        """Human readable one-line-per-action listing."""
        lines = []
        for a in self.actions:
            pre = " ".join(self.fluent_name(i) for i in a.pre)
            adds = " ".join(self.fluent_name(i) for i in _bits(a.add))
            dels = " ".join(self.fluent_name(i) for i in _bits(a.delete))
            conds = "; ".join(
                "when " + " ".join(self.fluent_name(i) for i in c.condition) + " add "
                + " ".join(self.fluent_name(i) for i in _bits(c.add))
                for c in a.conditional
            )
            lines.append(f"{a.label()} cost={_fmt(a.cost)} pre=[{pre}] add=[{adds}] del=[{dels}] cond=[{conds}]")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def holds(state: State, formula: tuple) -> bool:
    return eval_formula(formula, state.bits)


def apply(task: GroundTask, state: State, action: GroundAction) -> State:
    """Successor state; conditional effects read the pre-state."""
    bits = state.bits
    if bits & action.pre_mask != action.pre_mask:
        missing = next(i for i in action.pre if not bits >> i & 1)
        raise PreconditionViolation(action, task.fluent_name(missing))
    add, delete = action.add, action.delete
    for ce in action.conditional:
        if bits & ce.cond_mask == ce.cond_mask:
            add |= ce.add
            delete |= ce.delete
    return State((bits & ~delete) | add, state.cost + action.cost)


def successor_bits(action: GroundAction, bits: int) -> int:
    add, delete = action.add, action.delete
    for ce in action.conditional:
        if bits & ce.cond_mask == ce.cond_mask:
            add |= ce.add
            delete |= ce.delete
    return (bits & ~delete) | add


# -- grounding -------------------------------------------------------------


def static_predicates(domain: Domain) -> set[str]:
    touched: set[str] = set()

    def visit(eff):
        if isinstance(eff, Atom):
            touched.add(eff.predicate)
        elif isinstance(eff, Not):
            touched.add(eff.arg.predicate)
        elif isinstance(eff, And):
            for p in eff.parts:
                visit(p)
        elif isinstance(eff, Forall):
            visit(eff.body)
        elif isinstance(eff, When):
            visit(eff.effect)

    for a in domain.actions:
        visit(a.effect)
    return {p.name for p in domain.predicates} - touched


class _Grounder:
    def __init__(self, domain, problem, fluent_index, fluents, statics, create=True):
        self.domain = domain
        self.problem = problem
        self.fluent_index = fluent_index
        self.fluents = fluents
        self.statics = statics
        self.static_preds = static_predicates(domain)
        self.create = create
        self.universe_cache: dict[str, list[str]] = {}
        self.notes: list[str] = []

    def universe(self, type_name: str) -> list[str]:
        if type_name not in self.universe_cache:
            self.universe_cache[type_name] = self.problem.objects_of(self.domain, type_name)
        return self.universe_cache[type_name]

    def fluent(self, pred: str, args: tuple[str, ...]) -> Optional[int]:
        key = (pred, args)
        idx = self.fluent_index.get(key)
        if idx is None:
            if not self.create:
                return None
            idx = len(self.fluents)
            self.fluents.append(key)
            self.fluent_index[key] = idx
        return idx

    def atom(self, atom: Atom, binding: dict, positive: bool) -> tuple:
        args = tuple(binding.get(t, t) for t in atom.terms)
        if atom.predicate in self.static_preds:
            value = (atom.predicate, args) in self.statics
            return TRUE if value == positive else FALSE
        idx = self.fluent(atom.predicate, args)
        if idx is None:  # never-created fluent: false everywhere
            return FALSE if positive else TRUE
        return ("lit", idx) if positive else ("nlit", idx)

    def bindings(self, params) -> Iterable[dict]:
        pools = [self.universe(p.type) for p in params]
        for combo in itertools.product(*pools):
            yield {p.name: o for p, o in zip(params, combo)}

    def formula(self, f, binding: dict, positive: bool) -> tuple:
        """Ground and push negations inward (NNF) with static folding."""
        if isinstance(f, Atom):
            return self.atom(f, binding, positive)
        if isinstance(f, Not):
            return self.formula(f.arg, binding, not positive)
        if isinstance(f, (And, Or)):
            conj = isinstance(f, And) == positive
            stop = FALSE if conj else TRUE
            parts = []
            for p in f.parts:
                part = self.formula(p, binding, positive)
                if part == stop:
                    return stop
                parts.append(part)
            return _mk_and(parts) if conj else _mk_or(parts)
        if isinstance(f, (Forall, Exists)):
            pools = [self.universe(p.type) for p in f.params]
            if any(not pool for pool in pools):
                self.notes.append(
                    f"empty universe for {' '.join(p.type for p in f.params)} in "
                    f"{'forall' if isinstance(f, Forall) else 'exists'}"
                )
            conj = isinstance(f, Forall) == positive
            stop = FALSE if conj else TRUE
            parts = []
            for combo in itertools.product(*pools):
                inner = dict(binding)
                inner.update({p.name: o for p, o in zip(f.params, combo)})
                part = self.formula(f.body, inner, positive)
                if part == stop:
                    return stop
                parts.append(part)
            return _mk_and(parts) if conj else _mk_or(parts)
        raise GroundingError(f"unsupported formula node {f!r}")


def _to_dnf(formula: tuple) -> list[list[tuple]]:
    """DNF as a list of literal lists; [] means FALSE, [[]] means TRUE."""
    tag = formula[0]
    if tag == "true":
        return [[]]
    if tag == "false":
        return []
    if tag in ("lit", "nlit"):
        return [[formula]]
    if tag == "or":
        out = []
        for p in formula[1]:
            out.extend(_to_dnf(p))
            if len(out) > MAX_DNF_TERMS:
                raise GroundingError("disjunctive precondition too large")
        return out
    result: list[list[tuple]] = [[]]
    for p in formula[1]:
        sub = _to_dnf(p)
        result = [a + b for a in result for b in sub]
        if len(result) > MAX_DNF_TERMS:
            raise GroundingError("disjunctive precondition too large")
    return result


def _compile_negations(formula: tuple, complement_of: dict[int, int]) -> tuple:
    tag = formula[0]
    if tag == "nlit":
        comp = complement_of.get(formula[1])
        return ("lit", comp) if comp is not None else formula
    if tag in ("and", "or"):
        return (tag, tuple(_compile_negations(p, complement_of) for p in formula[1]))
    return formula


@dataclass
class _RawAction:
    schema: ActionSchema
    args: tuple[str, ...]
    pre: tuple
    add: set
    delete: set
    conditional: list  # (condition formula, add set, delete set)
    cost: float


def _split_top_conjuncts(f) -> list:
    if isinstance(f, And):
        out = []
        for p in f.parts:
            out.extend(_split_top_conjuncts(p))
        return out
    return [f]


def _static_filters(schema: ActionSchema, static_preds: set[str]) -> list[tuple[int, object, bool]]:
    """Top-level static literals of a precondition, keyed by the depth at which
    all their variables are bound."""
    order = {p.name: i for i, p in enumerate(schema.params)}
    out = []
    for conj in _split_top_conjuncts(schema.precondition):
        positive = True
        atom = conj
        if isinstance(conj, Not) and isinstance(conj.arg, Atom):
            atom, positive = conj.arg, False
        if not isinstance(atom, Atom) or atom.predicate not in static_preds:
            continue
        vars_ = [t for t in atom.terms if t.startswith("?")]
        if any(v not in order for v in vars_):
            continue
        depth = max((order[v] for v in vars_), default=-1)
        out.append((depth, atom, positive))
    return out


def _action_cost(g: _Grounder, eff, binding: dict, numeric: dict) -> float:
    total = 0.0
    if isinstance(eff, Increase):
        if eff.target.name != "totalCost":
            raise GroundingError(f"increase of {eff.target.name!r} is unsupported")
        if isinstance(eff.amount, FuncTerm):
            key = (eff.amount.name, tuple(binding.get(a, a) for a in eff.amount.args))
            if key not in numeric:
                raise GroundingError(f"no value for ({key[0]} {' '.join(key[1])})")
            total += numeric[key]
        else:
            total += float(eff.amount)
    elif isinstance(eff, And):
        for p in eff.parts:
            total += _action_cost(g, p, binding, numeric)
    elif isinstance(eff, Forall):
        if _contains_increase(eff.body):
            for inner in g.bindings(eff.params):
                total += _action_cost(g, eff.body, {**binding, **inner}, numeric)
    elif isinstance(eff, When):
        if _contains_increase(eff.effect):
            raise GroundingError("conditional cost effects are unsupported")
    return total


def _contains_increase(eff) -> bool:
    if isinstance(eff, Increase):
        return True
    if isinstance(eff, And):
        return any(_contains_increase(p) for p in eff.parts)
    if isinstance(eff, (Forall, When)):
        return _contains_increase(eff.body if isinstance(eff, Forall) else eff.effect)
    return False


def _ground_effects(g: _Grounder, eff, binding: dict, add: set, delete: set, conditional: list, cond=None):
    if isinstance(eff, Atom):
        if eff.predicate in g.static_preds:
            return
        idx = g.fluent(eff.predicate, tuple(binding.get(t, t) for t in eff.terms))
        (add if cond is None else conditional[-1][1]).add(idx)
    elif isinstance(eff, Not):
        idx = g.fluent(eff.arg.predicate, tuple(binding.get(t, t) for t in eff.arg.terms))
        (delete if cond is None else conditional[-1][2]).add(idx)
    elif isinstance(eff, And):
        for p in eff.parts:
            _ground_effects(g, p, binding, add, delete, conditional, cond)
    elif isinstance(eff, Forall):
        for inner in g.bindings(eff.params):
            _ground_effects(g, eff.body, {**binding, **inner}, add, delete, conditional, cond)
    elif isinstance(eff, When):
        condition = g.formula(eff.condition, binding, positive=True)
        if condition == FALSE:
            return
        if condition == TRUE:
            _ground_effects(g, eff.effect, binding, add, delete, conditional, None)
            return
        conditional.append((condition, set(), set()))
        _ground_effects(g, eff.effect, binding, add, delete, conditional, condition)
        if not conditional[-1][1] and not conditional[-1][2]:
            conditional.pop()
    elif isinstance(eff, Increase):
        return
    else:
        raise GroundingError(f"unsupported effect node {eff!r}")


def ground(domain: Domain, problem: Problem, prune: bool = True, prune_self_loops: bool = True) -> GroundTask:
    """Instantiate every schema over the typed object universe.

    With ``prune`` set, actions whose preconditions are unreachable under the
    delete relaxation are dropped as well.
    """
    static_preds = static_predicates(domain)
    statics = frozenset((a.predicate, a.terms) for a in problem.init if a.predicate in static_preds)
    numeric = {(n.term.name, n.term.args): float(n.value) for n in problem.numeric_init}
    static_index: dict = {}
    for pred, args in statics:
        for i, a in enumerate(args):
            static_index.setdefault((pred, i, args[:i] + args[i + 1 :]), set()).add(a)
    fluents: list = []
    fluent_index: dict = {}
    g = _Grounder(domain, problem, fluent_index, fluents, statics)

    raws: list[_RawAction] = []
    for schema in sorted(domain.actions, key=lambda s: s.name):
        filters = _static_filters(schema, static_preds)
        by_depth: dict[int, list] = {}
        for depth, atom, positive in filters:
            by_depth.setdefault(depth, []).append((atom, positive))
        pools = [g.universe(p.type) for p in schema.params]
        names = [p.name for p in schema.params]

        # positive static literals that pin down a parameter once the earlier ones are bound
        lookups: dict[int, list] = {}
        for depth, atom, positive in filters:
            if positive and depth >= 0 and atom.terms.count(names[depth]) == 1:
                lookups.setdefault(depth, []).append((atom, atom.terms.index(names[depth])))

        def extend(depth: int, binding: dict):
            for atom, positive in by_depth.get(depth - 1, ()):
                if ((atom.predicate, tuple(binding.get(t, t) for t in atom.terms)) in statics) != positive:
                    return
            if depth == len(names):
                yield dict(binding)
                return
            pool = pools[depth]
            for atom, pos in lookups.get(depth, ()):
                others = tuple(binding.get(t, t) for i, t in enumerate(atom.terms) if i != pos)
                allowed = static_index.get((atom.predicate, pos, others), ())
                pool = [o for o in pool if o in allowed]
            for obj in pool:
                binding[names[depth]] = obj
                yield from extend(depth + 1, binding)
            binding.pop(names[depth], None)

        for binding in extend(0, {}):
            args = tuple(binding[n] for n in names)
            pre = g.formula(schema.precondition, binding, positive=True)
            if pre == FALSE:
                continue
            add: set = set()
            delete: set = set()
            conditional: list = []
            _ground_effects(g, schema.effect, binding, add, delete, conditional)
            clash = add & delete
            if clash and prune_self_loops and len(set(args)) < len(args):
                # aliased parameters (e.g. GotoLocation l -> l): zero-progress self-loop
                continue
            if clash:
                raise GroundingError(
                    f"({schema.name} {' '.join(args)}) both adds and deletes "
                    + ", ".join("(" + " ".join((fluents[i][0],) + fluents[i][1]) + ")" for i in sorted(clash))
                )
            for _, cadd, cdel in conditional:
                if (cadd | add) & (cdel | delete):
                    raise GroundingError(f"({schema.name} {' '.join(args)}) has conflicting conditional effects")
            cost = _action_cost(g, schema.effect, binding, numeric)
            raws.append(_RawAction(schema, args, pre, add, delete, conditional, cost))

    goal = g.formula(problem.goal, {}, positive=True)

    # negative occurrences decide which fluents get complements
    negated: set[int] = set()

    def collect(f):
        if f[0] == "nlit":
            negated.add(f[1])
        elif f[0] in ("and", "or"):
            for p in f[1]:
                collect(p)

    for r in raws:
        collect(r.pre)
        for cond, _, _ in r.conditional:
            collect(cond)
    collect(goal)
    complement_of: dict[int, int] = {}
    for idx in sorted(negated):
        pred, args = fluents[idx]
        comp = len(fluents)
        fluents.append(("not-" + pred, args))
        fluent_index[fluents[comp]] = comp
        complement_of[idx] = comp

    def comp_masks(add: set, delete: set) -> tuple[int, int]:
        a = d = 0
        for i in add:
            a |= 1 << i
            if i in complement_of:
                d |= 1 << complement_of[i]
        for i in delete:
            d |= 1 << i
            if i in complement_of:
                a |= 1 << complement_of[i]
        return a, d

    # fluents only mentioned in init go last so indices depend on structure alone
    for a in problem.init:
        if a.predicate not in static_preds:
            g.fluent(a.predicate, a.terms)

    actions: list[GroundAction] = []
    for r in raws:
        pre = _compile_negations(r.pre, complement_of)
        add_mask, del_mask = comp_masks(r.add, r.delete)
        conds = []
        for cond, cadd, cdel in r.conditional:
            cond = _compile_negations(cond, complement_of)
            ca, cd = comp_masks(cadd, cdel)
            for term in _to_dnf(cond):
                idxs = tuple(sorted({lit[1] for lit in term}))
                conds.append(ConditionalEffect(idxs, _mask(idxs), ca, cd))
        for variant, term in enumerate(_to_dnf(pre)):
            idxs = tuple(sorted({lit[1] for lit in term}))
            actions.append(
                GroundAction(r.schema.name, r.args, idxs, _mask(idxs), add_mask, del_mask, tuple(conds), r.cost, variant)
            )

    init_bits = 0
    for a in problem.init:
        if a.predicate not in static_preds:
            init_bits |= 1 << fluent_index[(a.predicate, a.terms)]
    for pos, comp in complement_of.items():
        if not init_bits >> pos & 1:
            init_bits |= 1 << comp

    goal = _compile_negations(goal, complement_of)
    actions.sort(key=lambda a: a.sort_key)
    task = GroundTask(domain, problem, fluents, fluent_index, complement_of, actions, State(init_bits, 0.0), goal, statics, g.notes)
    task.unpruned = actions
    if prune:
        task.actions = _prune_unreachable(task)
    return task


def rebind(task: GroundTask, problem: Problem, prune: bool = True) -> GroundTask:
    """Reuse ``task``'s grounding for a problem that differs only in fluent init and numbers.

    Objects, static atoms and goal must be identical; action costs and the
    initial state are recomputed.
    """
    domain = task.domain
    static_preds = static_predicates(domain)
    statics = frozenset((a.predicate, a.terms) for a in problem.init if a.predicate in static_preds)
    if problem.objects != task.problem.objects or statics != task.statics or problem.goal != task.problem.goal:
        raise GroundingError("problem structure differs from the grounded task")
    numeric = {(n.term.name, n.term.args): float(n.value) for n in problem.numeric_init}
    g = _Grounder(domain, problem, task.fluent_index, task.fluents, statics, create=False)
    schemas = {a.name: a for a in domain.actions}
    actions = []
    for a in task.unpruned if task.unpruned is not None else task.actions:
        schema = schemas[a.name]
        cost = _action_cost(g, schema.effect, {p.name: v for p, v in zip(schema.params, a.args)}, numeric)
        actions.append(a if cost == a.cost else replace(a, cost=cost))
    bits = 0
    for a in problem.init:
        if a.predicate not in static_preds:
            idx = task.fluent_index.get((a.predicate, a.terms))
            if idx is not None:
                bits |= 1 << idx
    for pos, comp in task.complement_of.items():
        if not bits >> pos & 1:
            bits |= 1 << comp
    new = GroundTask(domain, problem, task.fluents, task.fluent_index, task.complement_of, actions, State(bits, 0.0),
                     task.goal, statics, list(task.notes))
    new.unpruned = actions
    if prune:
        new.actions = _prune_unreachable(new)
    return new


def _mask(idxs) -> int:
    m = 0
    for i in idxs:
        m |= 1 << i
    return m


def _prune_unreachable(task: GroundTask) -> list[GroundAction]:
    reached = task.init.bits
    changed = True
    while changed:
        changed = False
        for a in task.actions:
            if reached & a.pre_mask == a.pre_mask:
                new = reached | a.add
                for ce in a.conditional:
                    if new & ce.cond_mask == ce.cond_mask:
                        new |= ce.add
                if new != reached:
                    reached = new
                    changed = True
    return [a for a in task.actions if reached & a.pre_mask == a.pre_mask]
