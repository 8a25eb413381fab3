"""taskdl: the textual definition language for worlds, bodies and tasks"""

from .expressions import Expr, evaluate, format_number
from .document import SimDefaults, TaskDocument
from .parser import (
    check,
    parse,
    parse_clauses,
    parse_expression,
    parse_goal,
    parse_rule,
)
from .serializer import serialize


def load(path: str) -> TaskDocument:
    """Read and parse a ``.taskdl`` file"""
    with open(path, "rb") as f:
        return parse(f.read(), source=str(path))


__all__ = [
    "Expr",
    "evaluate",
    "format_number",
    "SimDefaults",
    "TaskDocument",
    "parse",
    "check",
    "parse_expression",
    "parse_rule",
    "parse_goal",
    "parse_clauses",
    "serialize",
    "load",
]
