#!/usr/bin/env python3
"""
Expression trees for dynamics, relations and variant terms

Nodes are immutable and compare structurally; source positions ride along
for diagnostics but never take part in equality. ``str(node)`` renders the
canonical taskdl text with the minimum parentheses needed to parse back to
the same tree.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Iterator, Mapping, Optional, Tuple

from ..errors import EvaluationError

Position = Optional[Tuple[int, int]]

NUMBER = "number"
BOOLEAN = "boolean"

# Binding strength used by the renderer; mirrors the parser's grammar levels
_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_SUM = 5
_PREC_TERM = 6
_PREC_UNARY = 7
_PREC_POW = 8
_PREC_ATOM = 9

ARITHMETIC_OPS = ("+", "-", "*", "/", "^")
COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGICAL_OPS = ("and", "or")

FUNCTIONS: Dict[str, Tuple[int, int]] = {
    # name: (min args, max args)
    "sqrt": (1, 1),
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sin": (1, 1),
    "cos": (1, 1),
    "min": (2, 32),
    "max": (2, 32),
}
NOISE_FUNCTIONS: Dict[str, int] = {"gauss": 1, "uniform": 2}
NON_SMOOTH_FUNCTIONS = frozenset({"min", "max", "abs"})


def format_number(value: float) -> str:
    """Shortest text that parses back to exactly ``value``"""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


class Expr:
    """Base class of all expression nodes"""

    precedence = _PREC_ATOM
    kind = NUMBER

    def children(self) -> Tuple["Expr", ...]:
        return ()

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> Any:
        raise NotImplementedError

    def variables(self) -> FrozenSet[str]:
        names: FrozenSet[str] = frozenset()
        for child in self.children():
            names = names | child.variables()
        return names

    def walk(self) -> Iterator["Expr"]:
        yield self
        for child in self.children():
            yield from child.walk()

    def has_noise(self) -> bool:
        return any(isinstance(node, Noise) for node in self.walk())

    def uses_delta(self) -> bool:
        return any(isinstance(node, Delta) for node in self.walk())

    def is_smooth(self) -> bool:
        """No branches, kinks or noise anywhere in the tree"""
        for node in self.walk():
            if isinstance(node, (Conditional, Noise)):
                return False
            if isinstance(node, Call) and node.func in NON_SMOOTH_FUNCTIONS:
                return False
            if isinstance(node, Binary) and node.op not in ARITHMETIC_OPS:
                return False
        return True

    def substitute(self, values: Mapping[str, float]) -> "Expr":
        """Replace variable references by literals (used for variant parameters)"""
        return self

    def render(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.render()


def _wrap(node: Expr, minimum: int) -> str:
    text = node.render()
    if node.precedence < minimum:
        return f"({text})"
    return text


@dataclass(frozen=True, eq=True)
class Literal(Expr):
    value: float

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return _PREC_UNARY if self.value < 0 else _PREC_ATOM

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> float:
        return self.value

    def render(self) -> str:
        return format_number(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    pos: Position = field(default=None, compare=False, repr=False)

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> float:
        return state[self.name]

    def variables(self) -> FrozenSet[str]:
        return frozenset((self.name,))

    def substitute(self, values: Mapping[str, float]) -> Expr:
        if self.name in values:
            return Literal(float(values[self.name]))
        return self

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class Delta(Expr):
    """The step size of the running simulation"""

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> float:
        return dt

    def render(self) -> str:
        return "delta"


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return _PREC_NOT if self.op == "not" else _PREC_UNARY

    @property
    def kind(self) -> str:  # type: ignore[override]
        return BOOLEAN if self.op == "not" else NUMBER

    def children(self) -> Tuple[Expr, ...]:
        return (self.operand,)

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> Any:
        value = self.operand.evaluate(state, dt, streams)
        if self.op == "not":
            return not value
        return -value

    def substitute(self, values: Mapping[str, float]) -> Expr:
        return Unary(self.op, self.operand.substitute(values))

    def render(self) -> str:
        if self.op == "not":
            return f"not {_wrap(self.operand, _PREC_NOT)}"
        if isinstance(self.operand, Literal) and self.operand.value >= 0:
            # "-3" would parse back as a negative literal
            return f"-({self.operand.render()})"
        return f"-{_wrap(self.operand, _PREC_UNARY)}"


def _divide(left: float, right: float) -> float:
    if right == 0:
        raise EvaluationError("division by zero")
    return left / right


def _power(left: float, right: float) -> float:
    if left < 0 and not float(right).is_integer():
        raise EvaluationError(
            f"negative base {left} raised to fractional power {right}"
        )
    if left == 0 and right < 0:
        raise EvaluationError("zero raised to a negative power")
    try:
        return left**right
    except OverflowError:
        raise EvaluationError(f"overflow computing {left} ^ {right}") from None


_BINARY: Dict[str, Callable[[Any, Any], Any]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _divide,
    "^": _power,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}

_BINARY_PREC = {
    "or": _PREC_OR,
    "and": _PREC_AND,
    "+": _PREC_SUM,
    "-": _PREC_SUM,
    "*": _PREC_TERM,
    "/": _PREC_TERM,
    "^": _PREC_POW,
}


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return _BINARY_PREC.get(self.op, _PREC_CMP)

    @property
    def kind(self) -> str:  # type: ignore[override]
        return NUMBER if self.op in ARITHMETIC_OPS else BOOLEAN

    def children(self) -> Tuple[Expr, ...]:
        return (self.left, self.right)

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> Any:
        if self.op == "and":
            return bool(self.left.evaluate(state, dt, streams)) and bool(
                self.right.evaluate(state, dt, streams)
            )
        if self.op == "or":
            return bool(self.left.evaluate(state, dt, streams)) or bool(
                self.right.evaluate(state, dt, streams)
            )
        return _BINARY[self.op](
            self.left.evaluate(state, dt, streams),
            self.right.evaluate(state, dt, streams),
        )

    def substitute(self, values: Mapping[str, float]) -> Expr:
        return Binary(
            self.op, self.left.substitute(values), self.right.substitute(values)
        )

    def render(self) -> str:
        prec = self.precedence
        if self.op == "^":
            left = _wrap(self.left, _PREC_ATOM)
            right = _wrap(self.right, _PREC_UNARY)
        elif prec == _PREC_CMP:
            left = _wrap(self.left, _PREC_SUM)
            right = _wrap(self.right, _PREC_SUM)
        elif self.op in LOGICAL_OPS:
            left = _wrap(self.left, prec)
            right = _wrap(self.right, prec + 1)
        else:
            left = _wrap(self.left, prec)
            right = _wrap(self.right, prec + 1)
        return f"{left} {self.op} {right}"


def _sqrt(x: float) -> float:
    if x < 0:
        raise EvaluationError(f"sqrt of negative value {x}")
    return math.sqrt(x)


def _log(x: float) -> float:
    if x <= 0:
        raise EvaluationError(f"log of non-positive value {x}")
    return math.log(x)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        raise EvaluationError(f"overflow computing exp({x})") from None


_CALLS: Dict[str, Callable[..., float]] = {
    "sqrt": _sqrt,
    "abs": abs,
    "exp": _exp,
    "log": _log,
    "sin": math.sin,
    "cos": math.cos,
    "min": min,
    "max": max,
}


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: Tuple[Expr, ...]

    def children(self) -> Tuple[Expr, ...]:
        return self.args

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> float:
        values = [arg.evaluate(state, dt, streams) for arg in self.args]
        return _CALLS[self.func](*values)

    def substitute(self, values: Mapping[str, float]) -> Expr:
        return Call(self.func, tuple(a.substitute(values) for a in self.args))

    def render(self) -> str:
        return f"{self.func}({', '.join(a.render() for a in self.args)})"


@dataclass(frozen=True)
class Conditional(Expr):
    """``if(condition, then, otherwise)``"""

    condition: Expr
    then: Expr
    otherwise: Expr

    def children(self) -> Tuple[Expr, ...]:
        return (self.condition, self.then, self.otherwise)

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> float:
        if self.condition.evaluate(state, dt, streams):
            return self.then.evaluate(state, dt, streams)
        return self.otherwise.evaluate(state, dt, streams)

    def substitute(self, values: Mapping[str, float]) -> Expr:
        return Conditional(
            self.condition.substitute(values),
            self.then.substitute(values),
            self.otherwise.substitute(values),
        )

    def render(self) -> str:
        return f"if({self.condition}, {self.then}, {self.otherwise})"


@dataclass(frozen=True)
class Noise(Expr):
    """Seeded noise term: ``gauss(sigma)`` or ``uniform(lo, hi)``

    ``channel`` is ``<phase>:<rule target>#<occurrence>`` and selects the
    random stream the term draws from.
    """

    dist: str
    args: Tuple[Expr, ...]
    channel: str
    pos: Position = field(default=None, compare=False, repr=False)

    def children(self) -> Tuple[Expr, ...]:
        return self.args

    def evaluate(self, state: Mapping[str, float], dt: float, streams: Any) -> float:
        if streams is None:
            raise EvaluationError(
                f"noise term {self} evaluated without a random stream"
            )
        params = [arg.evaluate(state, dt, streams) for arg in self.args]
        if self.dist == "gauss":
            if params[0] < 0:
                raise EvaluationError(f"negative noise sigma {params[0]}")
            return streams.normal(self.channel, params[0])
        low, high = params
        if low > high:
            raise EvaluationError(f"uniform noise with lower bound {low} above {high}")
        return streams.uniform(self.channel, low, high)

    def substitute(self, values: Mapping[str, float]) -> Expr:
        return Noise(
            self.dist, tuple(a.substitute(values) for a in self.args), self.channel
        )

    def render(self) -> str:
        return f"{self.dist}({', '.join(a.render() for a in self.args)})"


def evaluate(
    expr: Expr,
    state: Mapping[str, float],
    dt: float,
    streams: Any = None,
    rule: Optional[str] = None,
) -> float:
    """Evaluate an expression against a state

    Args:
        expr: Expression tree
        state: Values of every referenced variable
        dt: Step size bound to ``delta``
        streams: ``NoiseStreams`` for noise terms (may be None when there are none)
        rule: Rule description used in error messages

    Returns:
        The value; deterministic given the stream positions

    Raises:
        EvaluationError: Division by zero, sqrt of a negative, non-finite result
    """
    try:
        value = expr.evaluate(state, dt, streams)
    except EvaluationError as e:
        raise EvaluationError(
            f"{rule or expr}: {e} (at time {state.get('time', 'n/a')})"
        ) from None
    except KeyError as e:
        raise EvaluationError(
            f"{rule or expr}: variable {e.args[0]!r} missing from state"
        ) from None
    if isinstance(value, float) and not math.isfinite(value):
        raise EvaluationError(
            f"{rule or expr}: non-finite result (at time {state.get('time', 'n/a')})"
        )
    return value


def number_channels(expr: Expr, phase: str, target: str) -> Expr:
    """Give each noise term a stable channel id in left-to-right order"""
    counter = [0]

    def visit(node: Expr) -> Expr:
        if isinstance(node, Noise):
            args = tuple(visit(a) for a in node.args)
            channel = f"{phase}:{target}#{counter[0]}"
            counter[0] += 1
            return Noise(node.dist, args, channel, node.pos)
        if isinstance(node, Unary):
            return Unary(node.op, visit(node.operand))
        if isinstance(node, Binary):
            left = visit(node.left)
            return Binary(node.op, left, visit(node.right))
        if isinstance(node, Call):
            return Call(node.func, tuple(visit(a) for a in node.args))
        if isinstance(node, Conditional):
            cond = visit(node.condition)
            then = visit(node.then)
            return Conditional(cond, then, visit(node.otherwise))
        return node

    return visit(expr)
