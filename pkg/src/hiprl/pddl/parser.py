"""Recursive-descent reader for the household ADL subset.

Only constructs used by the shipped domain are accepted: typed objects,
and/or/not/forall/exists in conditions, when/forall/increase in effects and
the single ``:adl`` requirement flag. Anything else is rejected with a
position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    ActionSchema,
    And,
    Atom,
    Domain,
    Exists,
    Forall,
    Function,
    FuncTerm,
    Increase,
    Not,
    NumericAssignment,
    Or,
    Param,
    Predicate,
    Problem,
    When,
)

SUPPORTED_REQUIREMENTS = (":adl",)


class PDDLError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line = line
        self.col = col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)


class PDDLSyntaxError(PDDLError):
    pass


class PDDLSemanticError(PDDLError):
    pass


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    col: int


class SList(list):
    """A parenthesised form; remembers where it was opened."""

    line = 0
    col = 0


Node = Union[Token, SList]

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def tokenize(text: str) -> list[Token]:
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0]
        for m in _TOKEN_RE.finditer(line):
            tokens.append(Token(m.group(0), lineno, m.start() + 1))
    return tokens


def read_sexpr(text: str) -> SList:
    """Read exactly one top-level form."""
    tokens = tokenize(text)
    if not tokens:
        raise PDDLSyntaxError("empty input", 1, 1)
    stack: list[SList] = []
    root: Optional[SList] = None
    for tok in tokens:
        if tok.text == "(":
            lst = SList()
            lst.line, lst.col = tok.line, tok.col
            if stack:
                stack[-1].append(lst)
            elif root is not None:
                raise PDDLSyntaxError("unexpected form after end of definition", tok.line, tok.col)
            else:
                root = lst
            stack.append(lst)
        elif tok.text == ")":
            if not stack:
                raise PDDLSyntaxError("unbalanced ')'", tok.line, tok.col)
            stack.pop()
        else:
            if not stack:
                raise PDDLSyntaxError(f"unexpected token {tok.text!r} outside a form", tok.line, tok.col)
            stack[-1].append(tok)
    if stack:
        form = stack[-1]
        head = _head_text(form)
        raise PDDLSyntaxError(f"unclosed form '({head}' ", form.line, form.col)
    assert root is not None
    return root


def _head_text(form: SList) -> str:
    if form and isinstance(form[0], Token):
        return form[0].text
    return ""


def _pos(node: Node) -> tuple[int, int]:
    return node.line, node.col


def _expect_list(node: Node, what: str) -> SList:
    if not isinstance(node, SList):
        raise PDDLSyntaxError(f"expected {what}, got {node.text!r}", *_pos(node))
    return node


def _expect_token(node: Node, what: str) -> str:
    if not isinstance(node, Token):
        raise PDDLSyntaxError(f"expected {what}, got a parenthesised form", *_pos(node))
    return node.text


def _parse_typed_list(items: list[Node], allow_untyped: bool, what: str) -> list[tuple[str, Optional[str], Token]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, None)]."""
    out: list[tuple[str, Optional[str], Token]] = []
    pending: list[Token] = []
    i = 0
    while i < len(items):
        node = items[i]
        text = _expect_token(node, what)
        if text == "-":
            if i + 1 >= len(items):
                raise PDDLSyntaxError("dangling '-' in typed list", *_pos(node))
            type_name = _expect_token(items[i + 1], "type name")
            if not pending:
                raise PDDLSyntaxError("type given without names", *_pos(node))
            out.extend((t.text, type_name, t) for t in pending)
            pending = []
            i += 2
            continue
        pending.append(node)
        i += 1
    for t in pending:
        if not allow_untyped:
            raise PDDLSemanticError(f"{what} {t.text!r} has no type", t.line, t.col)
        out.append((t.text, None, t))
    return out


class _Scope:
    """Name resolution context for formulas."""

    def __init__(self, domain: Domain, objects: Optional[dict[str, str]] = None):
        self.domain = domain
        self.type_names = {t for t, _ in domain.types}
        self.predicates = {p.name: p for p in domain.predicates}
        self.functions = {f.name: f for f in domain.functions}
        self.objects = objects or {}

    def term_type(self, term: Token, variables: dict[str, str]) -> str:
        if term.text.startswith("?"):
            if term.text not in variables:
                raise PDDLSemanticError(f"unbound variable {term.text}", term.line, term.col)
            return variables[term.text]
        if term.text not in self.objects:
            raise PDDLSemanticError(f"undeclared object {term.text!r}", term.line, term.col)
        return self.objects[term.text]

    def check_type(self, tok: Token, type_name: Optional[str]) -> None:
        if type_name is not None and type_name not in self.type_names:
            raise PDDLSemanticError(f"undeclared type {type_name!r}", tok.line, tok.col)


def _parse_params(scope: _Scope, node: Node, variables: dict[str, str]) -> tuple[tuple[Param, ...], dict[str, str]]:
    lst = _expect_list(node, "parameter list")
    params = []
    inner = dict(variables)
    for name, type_name, tok in _parse_typed_list(list(lst), allow_untyped=False, what="parameter"):
        if not name.startswith("?"):
            raise PDDLSyntaxError(f"parameter {name!r} must start with '?'", tok.line, tok.col)
        scope.check_type(tok, type_name)
        params.append(Param(name, type_name))
        inner[name] = type_name
    return tuple(params), inner


def _parse_atom(scope: _Scope, form: SList, variables: dict[str, str]) -> Atom:
    name = _expect_token(form[0], "predicate name")
    if name not in scope.predicates:
        raise PDDLSemanticError(f"undeclared predicate {name!r}", form.line, form.col)
    pred = scope.predicates[name]
    args = form[1:]
    if len(args) != len(pred.params):
        raise PDDLSemanticError(
            f"predicate {name!r} expects {len(pred.params)} arguments, got {len(args)}", form.line, form.col
        )
    terms = []
    for arg, param in zip(args, pred.params):
        tok_text = _expect_token(arg, "term")
        ttype = scope.term_type(arg, variables)
        if param.type is not None and ttype is not None and not scope.domain.is_subtype(ttype, param.type):
            raise PDDLSemanticError(
                f"argument {tok_text} of type {ttype!r} does not fit {param.type!r} in {name!r}", arg.line, arg.col
            )
        terms.append(tok_text)
    return Atom(name, tuple(terms))


def _parse_formula(scope: _Scope, node: Node, variables: dict[str, str]):
    form = _expect_list(node, "formula")
    if not form:
        raise PDDLSyntaxError("empty formula", form.line, form.col)
    head = _head_text(form)
    if head == "and":
        return And(tuple(_parse_formula(scope, p, variables) for p in form[1:]))
    if head == "or":
        return Or(tuple(_parse_formula(scope, p, variables) for p in form[1:]))
    if head == "not":
        if len(form) != 2:
            raise PDDLSyntaxError("'not' takes exactly one argument", form.line, form.col)
        return Not(_parse_formula(scope, form[1], variables))
    if head in ("forall", "exists"):
        if len(form) != 3:
            raise PDDLSyntaxError(f"'{head}' takes a parameter list and a body", form.line, form.col)
        params, inner = _parse_params(scope, form[1], variables)
        body = _parse_formula(scope, form[2], inner)
        return (Forall if head == "forall" else Exists)(params, body)
    if head in ("imply", "=", "when", "increase"):
        raise PDDLSyntaxError(f"unsupported construct '{head}' in condition", form.line, form.col)
    return _parse_atom(scope, form, variables)


def _parse_func_term(scope: _Scope, node: Node, variables: dict[str, str]) -> FuncTerm:
    form = _expect_list(node, "function term")
    name = _expect_token(form[0], "function name")
    if name not in scope.functions:
        raise PDDLSemanticError(f"undeclared function {name!r}", form.line, form.col)
    fn = scope.functions[name]
    if len(form) - 1 != len(fn.params):
        raise PDDLSemanticError(
            f"function {name!r} expects {len(fn.params)} arguments, got {len(form) - 1}", form.line, form.col
        )
    args = []
    for arg in form[1:]:
        scope.term_type(arg, variables)
        args.append(_expect_token(arg, "term"))
    return FuncTerm(name, tuple(args))


def _parse_effect(scope: _Scope, node: Node, variables: dict[str, str], inside_when: bool = False):
    form = _expect_list(node, "effect")
    if not form:
        raise PDDLSyntaxError("empty effect", form.line, form.col)
    head = _head_text(form)
    if head == "and":
        return And(tuple(_parse_effect(scope, p, variables, inside_when) for p in form[1:]))
    if head == "not":
        if len(form) != 2:
            raise PDDLSyntaxError("'not' takes exactly one argument", form.line, form.col)
        inner = _expect_list(form[1], "atom")
        return Not(_parse_atom(scope, inner, variables))
    if head == "forall":
        if len(form) != 3:
            raise PDDLSyntaxError("'forall' takes a parameter list and a body", form.line, form.col)
        params, inner = _parse_params(scope, form[1], variables)
        return Forall(params, _parse_effect(scope, form[2], inner, inside_when))
    if head == "when":
        if inside_when:
            raise PDDLSyntaxError("'when' may not nest inside 'when'", form.line, form.col)
        if len(form) != 3:
            raise PDDLSyntaxError("'when' takes a condition and an effect", form.line, form.col)
        cond = _parse_formula(scope, form[1], variables)
        return When(cond, _parse_effect(scope, form[2], variables, inside_when=True))
    if head == "increase":
        if len(form) != 3:
            raise PDDLSyntaxError("'increase' takes a function term and an amount", form.line, form.col)
        target = _parse_func_term(scope, form[1], variables)
        if isinstance(form[2], Token):
            try:
                amount: Union[float, FuncTerm] = _number(form[2].text)
            except ValueError:
                raise PDDLSyntaxError(f"bad numeric amount {form[2].text!r}", *_pos(form[2])) from None
        else:
            amount = _parse_func_term(scope, form[2], variables)
        return Increase(target, amount)
    if head in ("or", "exists", "decrease", "assign", "scale-up", "scale-down"):
        raise PDDLSyntaxError(f"unsupported construct '{head}' in effect", form.line, form.col)
    return _parse_atom(scope, form, variables)


def _number(text: str):
    value = float(text)
    return int(value) if value.is_integer() and "." not in text else value


def _sections(form: SList, kind: str) -> tuple[str, list[SList]]:
    if len(form) < 2 or _head_text(form) != "define":
        raise PDDLSyntaxError("expected (define ...)", form.line, form.col)
    header = _expect_list(form[1], f"({kind} <name>)")
    if len(header) != 2 or _head_text(header) != kind:
        raise PDDLSyntaxError(f"expected ({kind} <name>)", header.line, header.col)
    name = _expect_token(header[1], f"{kind} name")
    sections = [_expect_list(s, "section") for s in form[2:]]
    return name, sections


def parse_domain(text: str) -> Domain:
    form = read_sexpr(text)
    name, sections = _sections(form, "domain")
    requirements: list[str] = []
    types: list[tuple[str, Optional[str]]] = []
    predicates: list[Predicate] = []
    functions: list[Function] = []
    action_forms: list[SList] = []
    seen_sections: set[str] = set()
    for sec in sections:
        key = _head_text(sec)
        if key != ":action":
            if key in seen_sections:
                raise PDDLSyntaxError(f"duplicate section {key}", sec.line, sec.col)
            seen_sections.add(key)
        if key == ":requirements":
            for tok in sec[1:]:
                flag = _expect_token(tok, "requirement flag")
                if flag not in SUPPORTED_REQUIREMENTS:
                    raise PDDLSemanticError(f"unsupported requirement {flag}", tok.line, tok.col)
                requirements.append(flag)
        elif key == ":types":
            for tname, parent, tok in _parse_typed_list(list(sec[1:]), allow_untyped=True, what="type"):
                if any(t == tname for t, _ in types):
                    raise PDDLSemanticError(f"duplicate type {tname!r}", tok.line, tok.col)
                types.append((tname, parent))
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate declaration")
                pname = _expect_token(p[0], "predicate name")
                params = tuple(Param(n, t) for n, t, _ in _parse_typed_list(list(p[1:]), False, "parameter"))
                if any(q.name == pname for q in predicates):
                    raise PDDLSemanticError(f"duplicate predicate {pname!r}", p.line, p.col)
                predicates.append(Predicate(pname, params))
        elif key == ":functions":
            items = list(sec[1:])
            i = 0
            while i < len(items):
                f = _expect_list(items[i], "function declaration")
                fname = _expect_token(f[0], "function name")
                params = tuple(Param(n, t) for n, t, _ in _parse_typed_list(list(f[1:]), True, "parameter"))
                i += 1
                # optional "- number" return type
                if i + 1 < len(items) and isinstance(items[i], Token) and items[i].text == "-":
                    i += 2
                if any(g.name == fname for g in functions):
                    raise PDDLSemanticError(f"duplicate function {fname!r}", f.line, f.col)
                functions.append(Function(fname, params))
        elif key == ":action":
            action_forms.append(sec)
        else:
            raise PDDLSyntaxError(f"unsupported section {key or '()'}", sec.line, sec.col)

    # parent types must be declared too
    declared = {t for t, _ in types}
    for tname, parent in types:
        if parent is not None and parent not in declared:
            raise PDDLSemanticError(f"undeclared supertype {parent!r} of {tname!r}", form.line, form.col)
    partial = Domain(name, tuple(requirements), tuple(types), tuple(predicates), tuple(functions), ())
    scope = _Scope(partial)
    for p in list(predicates) + list(functions):
        for prm in p.params:
            if prm.type is not None and prm.type not in declared:
                raise PDDLSemanticError(f"undeclared type {prm.type!r} in {p.name!r}", form.line, form.col)

    actions: list[ActionSchema] = []
    for sec in action_forms:
        actions.append(_parse_action(scope, sec))
        if sum(a.name == actions[-1].name for a in actions) > 1:
            raise PDDLSemanticError(f"duplicate action {actions[-1].name!r}", sec.line, sec.col)
    return Domain(name, tuple(requirements), tuple(types), tuple(predicates), tuple(functions), tuple(actions))


def _parse_action(scope: _Scope, sec: SList) -> ActionSchema:
    if len(sec) < 2:
        raise PDDLSyntaxError("action without a name", sec.line, sec.col)
    name = _expect_token(sec[1], "action name")
    fields: dict[str, Node] = {}
    i = 2
    while i < len(sec):
        key = _expect_token(sec[i], "action field keyword")
        if key not in (":parameters", ":precondition", ":effect"):
            raise PDDLSyntaxError(f"unsupported action field {key}", *_pos(sec[i]))
        if i + 1 >= len(sec):
            raise PDDLSyntaxError(f"missing value for {key}", *_pos(sec[i]))
        fields[key] = sec[i + 1]
        i += 2
    params: tuple[Param, ...] = ()
    variables: dict[str, str] = {}
    if ":parameters" in fields:
        params, variables = _parse_params(scope, fields[":parameters"], {})
    pre = _parse_formula(scope, fields[":precondition"], variables) if ":precondition" in fields else And()
    eff = _parse_effect(scope, fields[":effect"], variables) if ":effect" in fields else And()
    return ActionSchema(name, params, pre, eff)


def parse_problem(text: str, domain: Domain) -> Problem:
    form = read_sexpr(text)
    name, sections = _sections(form, "problem")
    domain_name = domain.name
    objects: list[Param] = []
    init: list[Atom] = []
    numeric: list[NumericAssignment] = []
    goal = None
    metric = None
    object_types: dict[str, str] = {}
    declared_types = {t for t, _ in domain.types}
    deferred: dict[str, SList] = {}
    for sec in sections:
        key = _head_text(sec)
        if key in deferred or (key == ":objects" and objects):
            raise PDDLSyntaxError(f"duplicate section {key}", sec.line, sec.col)
        if key == ":domain":
            domain_name = _expect_token(sec[1], "domain name")
            if domain_name != domain.name:
                raise PDDLSemanticError(
                    f"problem is for domain {domain_name!r}, not {domain.name!r}", sec.line, sec.col
                )
        elif key == ":requirements":
            for tok in sec[1:]:
                if _expect_token(tok, "requirement flag") not in SUPPORTED_REQUIREMENTS:
                    raise PDDLSemanticError(f"unsupported requirement {tok.text}", tok.line, tok.col)
        elif key == ":objects":
            for oname, otype, tok in _parse_typed_list(list(sec[1:]), False, "object"):
                if otype not in declared_types:
                    raise PDDLSemanticError(f"object {oname!r} has undeclared type {otype!r}", tok.line, tok.col)
                if oname in object_types:
                    raise PDDLSemanticError(f"duplicate object {oname!r}", tok.line, tok.col)
                object_types[oname] = otype
                objects.append(Param(oname, otype))
        elif key in (":init", ":goal", ":metric"):
            deferred[key] = sec
        else:
            raise PDDLSyntaxError(f"unsupported section {key or '()'}", sec.line, sec.col)

    scope = _Scope(domain, object_types)
    if ":init" in deferred:
        for entry in deferred[":init"][1:]:
            entry = _expect_list(entry, "init entry")
            if _head_text(entry) == "=":
                if len(entry) != 3:
                    raise PDDLSyntaxError("'=' takes a function term and a value", entry.line, entry.col)
                term = _parse_func_term(scope, entry[1], {})
                try:
                    value = _number(_expect_token(entry[2], "number"))
                except ValueError:
                    raise PDDLSyntaxError("bad numeric value", *_pos(entry[2])) from None
                numeric.append(NumericAssignment(term, value))
            else:
                init.append(_parse_atom(scope, entry, {}))
    if ":goal" in deferred:
        sec = deferred[":goal"]
        if len(sec) != 2:
            raise PDDLSyntaxError(":goal takes exactly one formula", sec.line, sec.col)
        goal = _parse_formula(scope, sec[1], {})
    if ":metric" in deferred:
        sec = deferred[":metric"]
        if len(sec) != 3 or _expect_token(sec[1], "metric direction") != "minimize":
            raise PDDLSyntaxError("only (:metric minimize <term>) is supported", sec.line, sec.col)
        metric = ("minimize", _parse_func_term(scope, sec[2], {}))
    return Problem(
        name,
        domain_name,
        tuple(objects),
        tuple(init),
        tuple(numeric),
        goal if goal is not None else And(),
        metric,
    )


def parse_goal(text: str, domain: Domain, objects: dict[str, str]):
    """Parse a bare ``(:goal F)`` block (or a bare formula) against an object table."""
    form = read_sexpr(text)
    if _head_text(form) == ":goal":
        if len(form) != 2:
            raise PDDLSyntaxError(":goal takes exactly one formula", form.line, form.col)
        form = form[1]
    return _parse_formula(_Scope(domain, objects), form, {})
