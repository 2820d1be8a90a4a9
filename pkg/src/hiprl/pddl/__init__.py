from importlib import resources

from .grounding import (
    FALSE,
    TRUE,
    GroundAction,
    GroundingError,
    GroundTask,
    PreconditionViolation,
    State,
    apply,
    eval_formula,
    ground,
    holds,
    successor_bits,
)
from .parser import PDDLError, PDDLSemanticError, PDDLSyntaxError, parse_domain, parse_goal, parse_problem
from .printer import format_node, print_domain, print_goal, print_problem
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
    free_variables,
    rename_bound,
)


def domain_text() -> str:
    """Source of the shipped household domain."""
    return resources.files(__package__).joinpath("data/domain.pddl").read_text()


def goal_example_text() -> str:
    return resources.files(__package__).joinpath("data/goal_example.pddl").read_text()


_DOMAIN_CACHE: dict = {}


def load_domain() -> Domain:
    if "domain" not in _DOMAIN_CACHE:
        _DOMAIN_CACHE["domain"] = parse_domain(domain_text())
    return _DOMAIN_CACHE["domain"]
