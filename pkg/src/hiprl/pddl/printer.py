"""Canonical text rendering; ``parse(print(x)) == x`` for every AST."""

from __future__ import annotations

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
    Param,
    Problem,
    When,
)

INDENT = "  "


def _typed(params) -> str:
    return " ".join(f"{p.name} - {p.type}" if p.type is not None else p.name for p in params)


def _func(term: FuncTerm) -> str:
    return "(" + " ".join((term.name,) + term.args) + ")"


def _num(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return f"{value:.1f}"
    return repr(value) if isinstance(value, float) else str(value)


def format_node(node, depth: int = 0) -> str:
    pad = INDENT * depth
    if isinstance(node, Atom):
        return pad + str(node)
    if isinstance(node, FuncTerm):
        return pad + _func(node)
    if isinstance(node, Not) and isinstance(node.arg, Atom):
        return f"{pad}(not {node.arg})"
    if isinstance(node, Increase):
        amount = _func(node.amount) if isinstance(node.amount, FuncTerm) else _num(node.amount)
        return f"{pad}(increase {_func(node.target)} {amount})"
    if isinstance(node, (And, Or)):
        word = "and" if isinstance(node, And) else "or"
        if not node.parts:
            return f"{pad}({word})"
        inner = "\n".join(format_node(p, depth + 1) for p in node.parts)
        return f"{pad}({word}\n{inner})"
    if isinstance(node, Not):
        return f"{pad}(not\n{format_node(node.arg, depth + 1)})"
    if isinstance(node, (Forall, Exists)):
        word = "forall" if isinstance(node, Forall) else "exists"
        return f"{pad}({word} ({_typed(node.params)})\n{format_node(node.body, depth + 1)})"
    if isinstance(node, When):
        return f"{pad}(when\n{format_node(node.condition, depth + 1)}\n{format_node(node.effect, depth + 1)})"
    raise TypeError(f"cannot print {node!r}")


def _format_action(action: ActionSchema) -> str:
    lines = [
        f"{INDENT}(:action {action.name}",
        f"{INDENT * 2}:parameters ({_typed(action.params)})",
        f"{INDENT * 2}:precondition",
        format_node(action.precondition, 3),
        f"{INDENT * 2}:effect",
        format_node(action.effect, 3) + ")",
    ]
    return "\n".join(lines)


def print_domain(domain: Domain) -> str:
    out = [f"(define (domain {domain.name})"]
    if domain.requirements:
        out.append(f"{INDENT}(:requirements {' '.join(domain.requirements)})")
    if domain.types:
        names = [t if parent is None else f"{t} - {parent}" for t, parent in domain.types]
        out.append(f"{INDENT}(:types\n" + "\n".join(INDENT * 2 + n for n in names) + ")")
    if domain.predicates:
        body = "\n".join(f"{INDENT * 2}({p.name}{' ' if p.params else ''}{_typed(p.params)})" for p in domain.predicates)
        out.append(f"{INDENT}(:predicates\n{body})")
    if domain.functions:
        body = "\n".join(f"{INDENT * 2}({f.name}{' ' if f.params else ''}{_typed(f.params)})" for f in domain.functions)
        out.append(f"{INDENT}(:functions\n{body})")
    for action in domain.actions:
        out.append(_format_action(action))
    return "\n".join(out) + ")\n"


def print_problem(problem: Problem) -> str:
    out = [f"(define (problem {problem.name})", f"{INDENT}(:domain {problem.domain_name})"]
    if problem.objects:
        out.append(f"{INDENT}(:objects\n" + "\n".join(f"{INDENT * 2}{o.name} - {o.type}" for o in problem.objects) + ")")
    init = [f"{INDENT * 2}{a}" for a in problem.init]
    init += [f"{INDENT * 2}(= {_func(n.term)} {_num(n.value)})" for n in problem.numeric_init]
    out.append(f"{INDENT}(:init" + ("\n" + "\n".join(init) if init else "") + ")")
    out.append(f"{INDENT}(:goal\n{format_node(problem.goal, 2)})")
    if problem.metric is not None:
        out.append(f"{INDENT}(:metric {problem.metric[0]} {_func(problem.metric[1])})")
    return "\n".join(out) + ")\n"


def print_goal(goal) -> str:
    return "(:goal\n" + format_node(goal, 1) + ")\n"


__all__ = ["print_domain", "print_problem", "print_goal", "format_node", "Param"]
