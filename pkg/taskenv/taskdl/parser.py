#!/usr/bin/env python3
"""
taskdl parser and validator

``parse`` turns text into a validated ``TaskDocument`` or raises
``TaskDLError`` with every diagnostic found; ``check`` returns the
diagnostics without raising. The grammar is documented in
``docs/source/grammar.rst``.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from ..errors import Diagnostic, StructuralError, TaskDLError
from ..tasks.problems import (
    FAILURE,
    GOAL,
    AtomicProblem,
    Conjunction,
    Disjunction,
    Goal,
    Negation,
    Problem,
    SerialProblem,
    Stage,
)
from ..tasks.task import Communication, EnergyBudget, Task
from ..tasks.variants import ChannelPatch, Distribution, StartPerturbation, VariantSpec
from ..world import (
    INF,
    AgentBody,
    Channel,
    InvariantRelation,
    Interval,
    PartialState,
    TransitionRule,
    Variable,
    World,
)
from ..world.model import RESERVED_NAMES
from .document import SimDefaults, TaskDocument
from .expressions import (
    BOOLEAN,
    COMPARISON_OPS,
    FUNCTIONS,
    NOISE_FUNCTIONS,
    NUMBER,
    Binary,
    Call,
    Conditional,
    Delta,
    Expr,
    Literal,
    Noise,
    Unary,
    Var,
    number_channels,
)
from .lexer import NAME, OP, STRING, Line, Token, tokenize
from .lexer import NUMBER as NUMBER_TOKEN
from .serializer import render_goal

logger = logging.getLogger(__name__)

MAX_NESTING = 40
MAX_NODES = 250
MAX_BLOCK_DEPTH = 32

TOP_LEVEL = ("world", "sim", "body", "task", "variant")


class _Fail(Exception):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(message)
        self.diagnostic = Diagnostic(line, column, message)


class _Cursor:
    """Token cursor over one line"""

    def __init__(self, line: Line):
        self.line = line
        self.tokens = line.tokens
        self.index = 0
        self.depth = 0
        self.nodes = 0

    def peek(self, offset: int = 0) -> Optional[Token]:
        i = self.index + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.index >= len(self.tokens)

    def fail(self, message: str, token: Optional[Token] = None) -> _Fail:
        token = token or self.peek()
        if token is None:
            last = self.tokens[-1]
            return _Fail(last.line, last.column + len(last.text), message)
        return _Fail(token.line, token.column, message)

    def next(self) -> Token:
        token = self.peek()
        if token is None:
            raise self.fail("unexpected end of line")
        self.index += 1
        return token

    def is_op(self, text: str, offset: int = 0) -> bool:
        token = self.peek(offset)
        return token is not None and token.kind == OP and token.text == text

    def is_name(self, word: str, offset: int = 0) -> bool:
        token = self.peek(offset)
        return token is not None and token.kind == NAME and token.text == word

    def accept_op(self, text: str) -> Optional[Token]:
        if self.is_op(text):
            return self.next()
        return None

    def accept_name(self, word: str) -> Optional[Token]:
        if self.is_name(word):
            return self.next()
        return None

    def expect_op(self, text: str) -> Token:
        if not self.is_op(text):
            raise self.fail(f"expected {text!r}")
        return self.next()

    def expect_name(self, word: str) -> Token:
        if not self.is_name(word):
            raise self.fail(f"expected {word!r}")
        return self.next()

    def identifier(self, what: str = "name") -> Token:
        token = self.peek()
        if token is None or token.kind != NAME:
            raise self.fail(f"expected a {what}")
        if token.text in RESERVED_NAMES:
            raise self.fail(
                f"{token.text!r} is reserved and cannot be used as a {what}"
            )
        return self.next()

    def number(self) -> float:
        """Signed number literal, ``inf`` allowed"""
        sign = 1.0
        if self.accept_op("-"):
            sign = -1.0
        else:
            self.accept_op("+")
        token = self.peek()
        if token is not None and token.kind == NAME and token.text == "inf":
            self.next()
            return sign * INF
        if token is None or token.kind != NUMBER_TOKEN:
            raise self.fail("expected a number")
        self.next()
        return sign * _to_float(token, self)

    def finite(self, what: str = "number") -> float:
        token = self.peek()
        value = self.number()
        if not math.isfinite(value):
            raise self.fail(f"{what} must be finite", token)
        return value

    def integer(self, what: str = "integer") -> int:
        token = self.peek()
        value = self.finite(what)
        if not value.is_integer() or value < 0:
            raise self.fail(f"{what} must be a non-negative whole number", token)
        return int(value)

    def finish(self) -> None:
        if not self.at_end():
            token = self.peek()
            assert token is not None
            raise self.fail(f"unexpected {token.text!r}")

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise self.fail("expression is nested too deeply")

    def leave(self) -> None:
        self.depth -= 1

    def node(self) -> None:
        self.nodes += 1
        if self.nodes > MAX_NODES:
            raise self.fail("expression is too long")


def _to_float(token: Token, cursor: _Cursor) -> float:
    value = float(token.text)
    if math.isinf(value):
        raise cursor.fail(f"number {token.text} is out of range", token)
    return value


# ---------------------------------------------------------------- expressions


def _need(c: _Cursor, expr: Expr, kind: str, token: Token) -> None:
    if expr.kind != kind:
        expected = "a numeric" if kind == NUMBER else "a boolean"
        raise c.fail(f"expected {expected} expression", token)


def _or(c: _Cursor) -> Expr:
    left = _and(c)
    while True:
        token = c.accept_name("or")
        if token is None:
            return left
        right = _and(c)
        _need(c, left, BOOLEAN, token)
        _need(c, right, BOOLEAN, token)
        c.node()
        left = Binary("or", left, right)


def _and(c: _Cursor) -> Expr:
    left = _not(c)
    while True:
        token = c.accept_name("and")
        if token is None:
            return left
        right = _not(c)
        _need(c, left, BOOLEAN, token)
        _need(c, right, BOOLEAN, token)
        c.node()
        left = Binary("and", left, right)


def _not(c: _Cursor) -> Expr:
    token = c.accept_name("not")
    if token is None:
        return _comparison(c)
    c.enter()
    operand = _not(c)
    c.leave()
    _need(c, operand, BOOLEAN, token)
    c.node()
    return Unary("not", operand)


def _comparison(c: _Cursor) -> Expr:
    left = _sum(c)
    token = c.peek()
    if token is None or token.kind != OP or token.text not in COMPARISON_OPS:
        return left
    c.next()
    right = _sum(c)
    _need(c, left, NUMBER, token)
    _need(c, right, NUMBER, token)
    following = c.peek()
    if (
        following is not None
        and following.kind == OP
        and following.text in COMPARISON_OPS
    ):
        raise c.fail("comparisons cannot be chained", following)
    c.node()
    return Binary(token.text, left, right)


def _sum(c: _Cursor) -> Expr:
    left = _term(c)
    while c.is_op("+") or c.is_op("-"):
        token = c.next()
        right = _term(c)
        _need(c, left, NUMBER, token)
        _need(c, right, NUMBER, token)
        c.node()
        left = Binary(token.text, left, right)
    return left


def _term(c: _Cursor) -> Expr:
    left = _unary(c)
    while c.is_op("*") or c.is_op("/"):
        token = c.next()
        right = _unary(c)
        _need(c, left, NUMBER, token)
        _need(c, right, NUMBER, token)
        c.node()
        left = Binary(token.text, left, right)
    return left


def _is_power_op(token: Optional[Token]) -> bool:
    return token is not None and token.kind == OP and token.text in ("^", "**")


def _unary(c: _Cursor) -> Expr:
    if c.is_op("-"):
        operand = c.peek(1)
        is_constant = operand is not None and (
            operand.kind == NUMBER_TOKEN
            or (operand.kind == NAME and operand.text == "inf")
        )
        # "-2" is a literal unless it is the base of a power: -2 ^ 2 == -(2 ^ 2)
        if is_constant and not _is_power_op(c.peek(2)):
            c.next()
            c.next()
            assert operand is not None
            c.node()
            if operand.kind == NAME:
                return Literal(-INF)
            return Literal(-_to_float(operand, c))
        token = c.next()
        c.enter()
        inner = _unary(c)
        c.leave()
        _need(c, inner, NUMBER, token)
        c.node()
        return Unary("-", inner)
    if c.accept_op("+"):
        c.enter()
        inner = _unary(c)
        c.leave()
        return inner
    return _power(c)


def _power(c: _Cursor) -> Expr:
    base = _atom(c)
    if not _is_power_op(c.peek()):
        return base
    token = c.next()
    c.enter()
    exponent = _unary(c)
    c.leave()
    _need(c, base, NUMBER, token)
    _need(c, exponent, NUMBER, token)
    c.node()
    return Binary("^", base, exponent)


def _arguments(c: _Cursor) -> List[Expr]:
    c.expect_op("(")
    args = [_or(c)]
    while c.accept_op(","):
        args.append(_or(c))
    c.expect_op(")")
    return args


def _atom(c: _Cursor) -> Expr:
    token = c.next()
    c.node()
    if token.kind == NUMBER_TOKEN:
        return Literal(_to_float(token, c))
    if token.kind == OP and token.text == "(":
        c.enter()
        inner = _or(c)
        c.expect_op(")")
        c.leave()
        return inner
    if token.kind != NAME:
        raise c.fail(f"unexpected {token.text!r}", token)
    word = token.text
    if word == "inf":
        return Literal(INF)
    if word == "delta":
        return Delta()
    if word == "if" or word in FUNCTIONS or word in NOISE_FUNCTIONS:
        if not c.is_op("("):
            raise c.fail(f"{word!r} must be called with arguments", token)
        c.enter()
        args = _arguments(c)
        c.leave()
        if word == "if":
            if len(args) != 3:
                raise c.fail("if takes 3 arguments: condition, then, otherwise", token)
            _need(c, args[0], BOOLEAN, token)
            _need(c, args[1], NUMBER, token)
            _need(c, args[2], NUMBER, token)
            return Conditional(args[0], args[1], args[2])
        for arg in args:
            _need(c, arg, NUMBER, token)
        if word in NOISE_FUNCTIONS:
            if len(args) != NOISE_FUNCTIONS[word]:
                raise c.fail(f"{word} takes {NOISE_FUNCTIONS[word]} argument(s)", token)
            return Noise(word, tuple(args), "", token.position)
        low, high = FUNCTIONS[word]
        if not low <= len(args) <= high:
            raise c.fail(f"{word} takes {low} to {high} arguments", token)
        return Call(word, tuple(args))
    if word in RESERVED_NAMES:
        raise c.fail(f"unexpected keyword {word!r}", token)
    return Var(word, token.position)


def _expression(c: _Cursor, kind: str) -> Expr:
    start = c.peek()
    if start is None:
        raise c.fail("expected an expression")
    expr = _or(c)
    _need(c, expr, kind, start)
    return expr


# ---------------------------------------------------------------- clauses


def _interval(c: _Cursor) -> Interval:
    opening = c.next()
    if opening.kind != OP or opening.text not in ("[", "("):
        raise c.fail("expected '[' or '(' to open an interval", opening)
    lower = c.number()
    c.expect_op(",")
    upper = c.number()
    closing = c.next()
    if closing.kind != OP or closing.text not in ("]", ")"):
        raise c.fail("expected ']' or ')' to close an interval", closing)
    if lower > upper:
        raise c.fail("interval lower bound exceeds upper bound", opening)
    return Interval(lower, upper, opening.text == "[", closing.text == "]")


def _clause(c: _Cursor) -> Tuple[Token, Interval]:
    name = c.identifier("variable")
    op = c.next()
    if op.kind == OP and op.text in (">", ">="):
        interval = Interval(c.number(), INF, lower_closed=op.text == ">=")
    elif op.kind == OP and op.text in ("<", "<="):
        interval = Interval(-INF, c.number(), upper_closed=op.text == "<=")
    elif op.kind == NAME and op.text == "in":
        interval = _interval(c)
    elif op.kind == OP and op.text == "~":
        centre = c.finite("centre")
        c.expect_op("+-")
        tolerance = c.finite("tolerance")
        if tolerance <= 0:
            raise c.fail("tolerance must be positive", op)
        interval = Interval(centre - tolerance, centre + tolerance)
    else:
        raise c.fail("expected '>', '>=', '<', '<=', 'in' or '~'", op)
    if not interval.is_proper():
        raise c.fail(f"bound on {name.text!r} is empty", op)
    return name, interval


def _clauses(c: _Cursor, refs: List[Tuple[str, Token]]) -> PartialState:
    bounds: Dict[str, Interval] = {}
    if c.at_end() or c.is_name("hold") or c.is_name("window"):
        return PartialState()
    while True:
        name, interval = _clause(c)
        if name.text in bounds:
            raise c.fail(f"duplicate bound on {name.text!r}", name)
        bounds[name.text] = interval
        refs.append((name.text, name))
        if not c.accept_op(","):
            return PartialState(bounds)


def _goal(c: _Cursor, polarity: str, refs: List[Tuple[str, Token]]) -> Goal:
    start = c.peek(-1) if c.index else c.peek()
    target = _clauses(c, refs)
    hold = 0.0
    window = (0.0, INF)
    seen = set()
    while not c.at_end():
        token = c.next()
        if (
            token.kind != NAME
            or token.text not in ("hold", "window")
            or token.text in seen
        ):
            raise c.fail(f"unexpected {token.text!r}", token)
        seen.add(token.text)
        if token.text == "hold":
            hold = c.finite("hold")
        else:
            window = (c.finite("window start"), c.number())
    try:
        return Goal(target, window, hold, polarity)
    except StructuralError as e:
        raise c.fail(str(e), start) from None


def _distribution(c: _Cursor) -> Distribution:
    token = c.peek()
    if token is not None and token.kind == NAME and token.text in ("uniform", "gauss"):
        c.next()
        c.expect_op("(")
        first = c.finite()
        c.expect_op(",")
        second = c.finite()
        c.expect_op(")")
        params: Tuple[float, ...] = (first, second)
        kind = token.text
    else:
        params = (c.finite(),)
        kind = "fixed"
    try:
        return Distribution(kind=kind, params=params)
    except ValidationError as e:
        raise c.fail(e.errors()[0]["msg"], token) from None


def _channel(c: _Cursor) -> Tuple[Token, Dict[str, Any]]:
    variable = c.identifier("variable")
    options: Dict[str, Any] = {}
    while not c.at_end():
        token = c.next()
        if token.kind != NAME or token.text not in ("noise", "resolution", "latency"):
            raise c.fail("expected 'noise', 'resolution' or 'latency'", token)
        if token.text in options:
            raise c.fail(f"duplicate {token.text!r}", token)
        if token.text == "latency":
            options["latency"] = c.integer("latency")
        else:
            value = c.finite(token.text)
            if value < 0:
                raise c.fail(f"{token.text} must be >= 0", token)
            options["noise_sigma" if token.text == "noise" else "resolution"] = value
    return variable, options


def _rule(c: _Cursor, phase: str) -> Tuple[Token, TransitionRule]:
    target = c.identifier("variable")
    c.expect_op("<-")
    expr = _expression(c, NUMBER)
    c.finish()
    rule = TransitionRule(target.text, number_channels(expr, phase, target.text))
    return target, rule


# ---------------------------------------------------------------- blocks


@dataclass
class _WorldBlock:
    token: Token
    name: str
    variables: List[Tuple[Token, Variable, float]] = field(default_factory=list)
    dynamics: List[Tuple[Token, TransitionRule]] = field(default_factory=list)
    relations: List[Tuple[Token, InvariantRelation]] = field(default_factory=list)


@dataclass
class _BodyBlock:
    token: Token
    name: str
    sensors: List[Tuple[Token, Channel]] = field(default_factory=list)
    actuators: List[Tuple[Token, Channel]] = field(default_factory=list)


@dataclass
class _Frame:
    kind: str
    token: Token
    deadline: float = 0.0
    goals: List[Goal] = field(default_factory=list)
    failures: List[Goal] = field(default_factory=list)
    children: List[Any] = field(default_factory=list)
    initial: Dict[str, Interval] = field(default_factory=dict)


@dataclass
class _TaskBlock:
    token: Token
    name: str
    fields: Dict[str, Any] = field(default_factory=dict)
    start: Dict[str, float] = field(default_factory=dict)
    channels: Dict[str, Channel] = field(default_factory=dict)
    after: List[Tuple[Token, TransitionRule]] = field(default_factory=list)
    hints: List[str] = field(default_factory=list)
    tags: Dict[str, Union[float, str]] = field(default_factory=dict)
    refs: List[Tuple[str, Token]] = field(default_factory=list)
    stack: List[_Frame] = field(default_factory=list)
    problem: Optional[Problem] = None


@dataclass
class _VariantBlock:
    token: Token
    name: str
    data: Dict[str, Any] = field(default_factory=dict)
    refs: List[Tuple[str, Token]] = field(default_factory=list)
    rules: List[Tuple[Token, TransitionRule]] = field(default_factory=list)


Block = Union[_WorldBlock, _BodyBlock, _TaskBlock, _VariantBlock]


def _loose_allowed(frame: _Frame) -> bool:
    return frame.kind in ("root", "stage", "not", "atom")


class _Parser:
    def __init__(self) -> None:
        self.diagnostics: List[Diagnostic] = []
        self.worlds: List[_WorldBlock] = []
        self.sims: List[Tuple[Token, SimDefaults]] = []
        self.bodies: List[_BodyBlock] = []
        self.tasks: List[_TaskBlock] = []
        self.variants: List[_VariantBlock] = []
        self.current: Optional[Block] = None

    def error(self, token: Token, message: str) -> None:
        self.diagnostics.append(Diagnostic(token.line, token.column, message))

    # syntax pass ------------------------------------------------------

    def read(self, lines: List[Line]) -> None:
        for line in lines:
            c = _Cursor(line)
            try:
                if line.indented:
                    self._block_line(c)
                else:
                    self._top_line(c)
            except _Fail as fail:
                self.diagnostics.append(fail.diagnostic)
        self._close_block()

    def _close_block(self) -> None:
        block = self.current
        if isinstance(block, _TaskBlock):
            for frame in block.stack[1:]:
                self.error(
                    frame.token, f"{frame.kind!r} block is not closed with 'end'"
                )
            if block.stack and len(block.stack) == 1:
                block.problem = self._root_problem(block.stack[0])
        self.current = None

    def _top_line(self, c: _Cursor) -> None:
        self._close_block()
        keyword = c.next()
        if keyword.kind != NAME or keyword.text not in TOP_LEVEL:
            raise c.fail(
                "expected 'world', 'sim', 'body', 'task' or 'variant' "
                "at the start of a block",
                keyword,
            )
        if keyword.text == "sim":
            self._sim(c, keyword)
            return
        name = c.identifier(f"{keyword.text} name")
        c.finish()
        if keyword.text == "world":
            self.current = _WorldBlock(keyword, name.text)
            self.worlds.append(self.current)
        elif keyword.text == "body":
            self.current = _BodyBlock(keyword, name.text)
            self.bodies.append(self.current)
        elif keyword.text == "task":
            block = _TaskBlock(keyword, name.text)
            block.stack.append(_Frame("root", keyword))
            self.current = block
            self.tasks.append(block)
        else:
            self.current = _VariantBlock(keyword, name.text)
            self.variants.append(self.current)

    def _sim(self, c: _Cursor, keyword: Token) -> None:
        values: Dict[str, Any] = {}
        while not c.at_end():
            token = c.next()
            if (
                token.kind != NAME
                or token.text not in ("delta", "seed")
                or token.text in values
            ):
                raise c.fail("expected 'delta <step>' or 'seed <n>'", token)
            if token.text == "delta":
                values["delta"] = c.finite("delta")
            else:
                values["seed"] = c.integer("seed")
        try:
            self.sims.append((keyword, SimDefaults(**values)))
        except StructuralError as e:
            raise c.fail(str(e), keyword) from None

    def _block_line(self, c: _Cursor) -> None:
        block = self.current
        keyword = c.next()
        if block is None:
            raise c.fail("indented line outside a block", keyword)
        if keyword.kind != NAME:
            raise c.fail(f"unexpected {keyword.text!r}", keyword)
        if isinstance(block, _WorldBlock):
            self._world_line(c, block, keyword)
        elif isinstance(block, _BodyBlock):
            self._body_line(c, block, keyword)
        elif isinstance(block, _TaskBlock):
            self._task_line(c, block, keyword)
        else:
            self._variant_line(c, block, keyword)

    def _world_line(self, c: _Cursor, block: _WorldBlock, keyword: Token) -> None:
        if keyword.text == "var":
            name = c.identifier("variable name")
            c.expect_op("=")
            value = c.finite("initial value")
            domain = Interval.unbounded()
            unit = None
            while not c.at_end():
                token = c.next()
                if token.kind == NAME and token.text == "in":
                    domain = _interval(c)
                    if not (domain.lower_closed and domain.upper_closed):
                        raise c.fail("variable domains are closed intervals", token)
                elif token.kind == NAME and token.text == "unit":
                    unit_token = c.next()
                    if unit_token.kind not in (NAME, STRING):
                        raise c.fail("expected a unit name or quoted text", unit_token)
                    unit = unit_token.text
                else:
                    raise c.fail(f"unexpected {token.text!r}", token)
            block.variables.append((name, Variable(name.text, domain, unit), value))
        elif keyword.text == "dyn":
            block.dynamics.append(_rule(c, "dyn"))
        elif keyword.text == "rel":
            expr = _expression(c, BOOLEAN)
            c.finish()
            block.relations.append((keyword, InvariantRelation(expr)))
        else:
            raise c.fail("expected 'var', 'dyn' or 'rel' in a world block", keyword)

    def _body_line(self, c: _Cursor, block: _BodyBlock, keyword: Token) -> None:
        if keyword.text not in ("sensor", "actuator"):
            raise c.fail("expected 'sensor' or 'actuator' in a body block", keyword)
        variable, options = _channel(c)
        target = block.sensors if keyword.text == "sensor" else block.actuators
        target.append((variable, Channel(variable.text, **options)))

    def _task_line(self, c: _Cursor, block: _TaskBlock, keyword: Token) -> None:
        word = keyword.text
        if not block.stack:
            raise c.fail("line after the end of the task's problem", keyword)
        frame = block.stack[-1]
        if word in ("body", "mode", "deadline", "energy"):
            if len(block.stack) > 1:
                raise c.fail(f"{word!r} is not allowed inside a problem block", keyword)
            if word in block.fields:
                raise c.fail(f"duplicate {word!r} line", keyword)
            if word == "body":
                block.fields["body"] = (keyword, c.identifier("body name").text)
            elif word == "mode":
                mode = c.next()
                try:
                    block.fields["mode"] = Communication.from_keyword(mode.text)
                except StructuralError:
                    raise c.fail(
                        "mode must be 'full', 'reinforcement' or 'hints'", mode
                    ) from None
            elif word == "deadline":
                token = c.peek()
                deadline = c.finite("deadline")
                if deadline <= 0:
                    raise c.fail("deadline must be positive", token)
                block.fields["deadline"] = deadline
            else:
                variable = c.identifier("energy variable")
                c.expect_op(">")
                block.fields["energy"] = EnergyBudget(
                    variable.text, c.finite("energy floor")
                )
                block.refs.append((variable.text, variable))
            c.finish()
        elif word == "start":
            if len(block.stack) > 1:
                raise c.fail("'start' is not allowed inside a problem block", keyword)
            variable = c.identifier("variable")
            c.expect_op("=")
            if variable.text in block.start:
                raise c.fail(f"duplicate start value for {variable.text!r}", variable)
            block.start[variable.text] = c.finite("start value")
            block.refs.append((variable.text, variable))
            c.finish()
        elif word == "require":
            target = _clauses(c, block.refs)
            c.finish()
            if target.is_empty():
                raise c.fail("require needs at least one clause", keyword)
            if frame.kind not in ("root", "stage"):
                raise c.fail("'require' belongs to the task or a stage", keyword)
            for name, interval in target.bounds.items():
                if name in frame.initial:
                    raise c.fail(f"duplicate requirement on {name!r}", keyword)
                frame.initial[name] = interval
        elif word in ("goal", "fail"):
            goal = _goal(c, GOAL if word == "goal" else FAILURE, block.refs)
            if frame.children or not _loose_allowed(frame):
                raise c.fail(
                    f"'{word}' lines here must be grouped in an 'atom' block", keyword
                )
            (frame.goals if word == "goal" else frame.failures).append(goal)
        elif word in ("all", "any", "not", "atom", "then", "stage"):
            self._open_frame(c, block, frame, keyword)
        elif word == "end":
            c.finish()
            self._close_frame(c, block, keyword)
        elif word == "after":
            if len(block.stack) > 1:
                raise c.fail("'after' is not allowed inside a problem block", keyword)
            block.after.append(_rule(c, "after"))
        elif word in ("sensor", "actuator"):
            if len(block.stack) > 1:
                raise c.fail(f"{word!r} is not allowed inside a problem block", keyword)
            variable, options = _channel(c)
            key = f"{word}:{variable.text}"
            if key in block.channels:
                raise c.fail(f"duplicate override of {key!r}", variable)
            block.channels[key] = Channel(variable.text, **options)
            block.refs.append((variable.text, variable))
        elif word == "hint":
            text = c.next()
            if text.kind != STRING:
                raise c.fail("hint text must be quoted", text)
            c.finish()
            block.hints.append(text.text)
        elif word == "tag":
            key = c.identifier("tag name")
            c.expect_op("=")
            token = c.peek()
            if token is not None and token.kind == STRING:
                c.next()
                block.tags[key.text] = token.text
            else:
                block.tags[key.text] = c.finite("tag value")
            c.finish()
        else:
            raise c.fail(f"unknown task line {word!r}", keyword)

    def _open_frame(
        self, c: _Cursor, block: _TaskBlock, frame: _Frame, keyword: Token
    ) -> None:
        word = keyword.text
        deadline = 0.0
        if word == "stage":
            if frame.kind != "then":
                raise c.fail("'stage' blocks belong inside a 'then' block", keyword)
            token = c.peek()
            deadline = c.finite("stage deadline")
            if deadline <= 0:
                raise c.fail("stage deadline must be positive", token)
        elif frame.kind == "then":
            raise c.fail("a 'then' block holds only 'stage' blocks", keyword)
        elif word == "atom" and frame.kind == "atom":
            raise c.fail("'atom' blocks cannot be nested", keyword)
        elif frame.goals or frame.failures:
            raise c.fail(
                "cannot mix loose goal lines with a sub-problem block", keyword
            )
        elif frame.kind in ("root", "stage", "not") and frame.children:
            raise c.fail("only one sub-problem block is allowed here", keyword)
        elif frame.kind == "atom":
            raise c.fail("an 'atom' block holds only goal and fail lines", keyword)
        c.finish()
        if len(block.stack) > MAX_BLOCK_DEPTH:
            raise c.fail("problem blocks are nested too deeply", keyword)
        block.stack.append(_Frame(word, keyword, deadline=deadline))

    def _close_frame(self, c: _Cursor, block: _TaskBlock, keyword: Token) -> None:
        if len(block.stack) < 2:
            raise c.fail("'end' without an open block", keyword)
        frame = block.stack.pop()
        parent = block.stack[-1]
        if frame.kind in ("all", "any", "then") and not frame.children:
            raise c.fail(f"{frame.kind!r} block is empty", frame.token)
        if frame.kind == "all":
            node: Any = Conjunction(tuple(frame.children))
        elif frame.kind == "any":
            node = Disjunction(tuple(frame.children))
        elif frame.kind == "then":
            node = SerialProblem(tuple(frame.children))
        elif frame.kind == "atom":
            node = AtomicProblem(tuple(frame.goals), tuple(frame.failures))
        elif frame.kind == "not":
            node = Negation(self._root_problem(frame))
        else:
            node = Stage(
                self._root_problem(frame),
                frame.deadline,
                PartialState(frame.initial),
            )
        parent.children.append(node)

    @staticmethod
    def _root_problem(frame: _Frame) -> Problem:
        if frame.children:
            return frame.children[0]
        return AtomicProblem(tuple(frame.goals), tuple(frame.failures))

    def _variant_line(self, c: _Cursor, block: _VariantBlock, keyword: Token) -> None:
        word = keyword.text
        data = block.data
        if word == "base":
            data["base"] = c.identifier("task name").text
            c.finish()
        elif word in ("count", "seed"):
            data[word] = c.integer(word)
            c.finish()
        elif word == "param":
            name = c.identifier("parameter name")
            c.expect_op("=")
            data.setdefault("params", {})[name.text] = _distribution(c)
            c.finish()
        elif word == "start":
            variable = c.identifier("variable")
            op = c.next()
            modes = {"=": "set", "+": "offset", "*": "scale"}
            if op.kind != OP or op.text not in modes:
                raise c.fail("expected '=', '+' or '*'", op)
            data.setdefault("start", {})[variable.text] = StartPerturbation(
                mode=modes[op.text], value=_distribution(c)
            )
            block.refs.append((variable.text, variable))
            c.finish()
        elif word in ("deadline", "energy"):
            c.expect_op("*")
            data[f"{word}_scale"] = _distribution(c)
            c.finish()
        elif word in ("sensor", "actuator"):
            variable, options = _channel(c)
            patches = data.setdefault("channels", {})
            patches[f"{word}:{variable.text}"] = ChannelPatch(**options)
            block.refs.append((variable.text, variable))
        elif word == "after":
            target, rule = _rule(c, "after")
            block.rules.append((target, rule))
            data.setdefault("after", []).append(str(rule))
        elif word in ("goal", "fail"):
            goal = _goal(c, GOAL if word == "goal" else FAILURE, block.refs)
            data.setdefault("goals", []).append(render_goal(goal))
        else:
            raise c.fail(f"unknown variant line {word!r}", keyword)

    # semantic pass ----------------------------------------------------

    def build(self) -> Optional[TaskDocument]:
        if len(self.worlds) != 1:
            if not self.worlds:
                self.diagnostics.append(Diagnostic(1, 1, "document has no world block"))
            for extra in self.worlds[1:]:
                self.error(extra.token, "only one world block is allowed")
            return None
        for extra in self.sims[1:]:
            self.error(extra[0], "only one sim line is allowed")
        world = self._build_world(self.worlds[0])
        if world is None:
            return None
        bodies = [b for b in (self._build_body(b, world) for b in self.bodies) if b]
        tasks = [
            t for t in (self._build_task(t, world, bodies) for t in self.tasks) if t
        ]
        variants = [
            v
            for v in (self._build_variant(v, world, tasks) for v in self.variants)
            if v
        ]
        self._check_unique(self.bodies, "body")
        self._check_unique(self.tasks, "task")
        self._check_unique(self.variants, "variant")
        if self.diagnostics:
            return None
        sim = self.sims[0][1] if self.sims else SimDefaults()
        try:
            return TaskDocument(
                world, tuple(bodies), tuple(tasks), tuple(variants), sim
            )
        except StructuralError as e:
            self.diagnostics.append(Diagnostic(1, 1, str(e)))
            return None

    def _check_unique(self, blocks: List[Any], kind: str) -> None:
        seen = set()
        for block in blocks:
            if block.name in seen:
                self.error(block.token, f"duplicate {kind} {block.name!r}")
            seen.add(block.name)

    def _unknown_refs(
        self, expr: Expr, names: set, extra: Tuple[str, ...] = ()
    ) -> bool:
        ok = True
        for node in expr.walk():
            if (
                isinstance(node, Var)
                and node.name not in names
                and node.name not in extra
            ):
                line, column = node.pos or (1, 1)
                self.diagnostics.append(
                    Diagnostic(line, column, f"unknown variable {node.name!r}")
                )
                ok = False
        return ok

    def _build_world(self, block: _WorldBlock) -> Optional[World]:
        before = len(self.diagnostics)
        names = set()
        for token, variable, value in block.variables:
            if variable.name in names:
                self.error(token, f"duplicate variable {variable.name!r}")
            names.add(variable.name)
            if not variable.domain.contains(value):
                self.error(
                    token,
                    f"initial value {value} of {variable.name!r} "
                    "is outside its domain",
                )
        targets = set()
        for token, rule in block.dynamics:
            if rule.target not in names:
                self.error(token, f"rule targets unknown variable {rule.target!r}")
            elif rule.target in targets:
                self.error(token, f"duplicate rule for {rule.target!r}")
            targets.add(rule.target)
            self._unknown_refs(rule.expression, names)
        for token, relation in block.relations:
            self._unknown_refs(relation.expression, names)
        if len(self.diagnostics) > before:
            return None
        try:
            return World(
                block.name,
                tuple(v for _, v, _ in block.variables),
                tuple(r for _, r in block.dynamics),
                {v.name: value for _, v, value in block.variables},
                tuple(r for _, r in block.relations),
            )
        except (StructuralError, ValueError) as e:
            self.error(block.token, str(e))
            return None

    def _build_body(self, block: _BodyBlock, world: World) -> Optional[AgentBody]:
        before = len(self.diagnostics)
        for token, channel in block.sensors + block.actuators:
            if not world.has_variable(channel.variable):
                self.error(token, f"unknown variable {channel.variable!r}")
        if len(self.diagnostics) > before:
            return None
        try:
            body = AgentBody(
                block.name,
                tuple(c for _, c in block.sensors),
                tuple(c for _, c in block.actuators),
            )
            body.check_against(world)
            return body
        except StructuralError as e:
            self.error(block.token, str(e))
            return None

    def _build_task(
        self, block: _TaskBlock, world: World, bodies: List[AgentBody]
    ) -> Optional[Task]:
        before = len(self.diagnostics)
        for name, token in block.refs:
            if not world.has_variable(name):
                self.error(token, f"unknown variable {name!r}")
        for token, rule in block.after:
            if not world.has_variable(rule.target):
                self.error(token, f"rule targets unknown variable {rule.target!r}")
            self._unknown_refs(rule.expression, set(world.names))
        for required in ("body", "deadline", "energy"):
            if required not in block.fields:
                self.error(block.token, f"task {block.name!r} has no {required!r} line")
        if "body" in block.fields:
            token, body_name = block.fields["body"]
            if not any(b.name == body_name for b in bodies):
                self.error(token, f"unknown body {body_name!r}")
        if len(self.diagnostics) > before or block.problem is None:
            return None
        root = block.stack[0]
        try:
            task = Task(
                name=block.name,
                problem=block.problem,
                body=block.fields["body"][1],
                deadline=block.fields["deadline"],
                energy=block.fields["energy"],
                communication=block.fields.get("mode", Communication.FULL),
                initial=PartialState(root.initial),
                start=block.start,
                after=tuple(r for _, r in block.after),
                channels=block.channels,
                hints=tuple(block.hints),
                tags=block.tags,
            )
            body = next(b for b in bodies if b.name == task.body)
            task.setup(world, body)
            return task
        except (StructuralError, ValueError) as e:
            self.error(block.token, str(e))
            return None

    def _build_variant(
        self, block: _VariantBlock, world: World, tasks: List[Task]
    ) -> Optional[VariantSpec]:
        before = len(self.diagnostics)
        if "base" not in block.data:
            self.error(block.token, f"variant {block.name!r} has no 'base' line")
        elif not any(t.name == block.data["base"] for t in tasks):
            self.error(block.token, f"unknown base task {block.data['base']!r}")
        for name, token in block.refs:
            if not world.has_variable(name):
                self.error(token, f"unknown variable {name!r}")
        params = tuple(block.data.get("params", {}))
        for name in params:
            if world.has_variable(name):
                self.error(block.token, f"parameter {name!r} shadows a world variable")
        for token, rule in block.rules:
            if not world.has_variable(rule.target):
                self.error(token, f"rule targets unknown variable {rule.target!r}")
            self._unknown_refs(rule.expression, set(world.names), params)
        if len(self.diagnostics) > before:
            return None
        try:
            return VariantSpec(name=block.name, **block.data)
        except ValidationError as e:
            self.error(block.token, e.errors()[0]["msg"])
            return None


def _decode(text: Union[str, bytes]) -> Tuple[Optional[str], List[Diagnostic]]:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            return None, [Diagnostic(1, e.start + 1, "input is not valid UTF-8")]
    if text.startswith("\ufeff"):
        text = text[1:]
    return text, []


def _parse(text: Union[str, bytes]) -> Tuple[Optional[TaskDocument], List[Diagnostic]]:
    source, diagnostics = _decode(text)
    if source is None:
        return None, diagnostics
    lines, diagnostics = tokenize(source)
    parser = _Parser()
    parser.diagnostics.extend(diagnostics)
    try:
        parser.read(lines)
        doc = parser.build()
    except RecursionError:
        parser.diagnostics.append(Diagnostic(1, 1, "document is nested too deeply"))
        doc = None
    diagnostics = sorted(
        set(parser.diagnostics), key=lambda d: (d.line, d.column, d.message)
    )
    if diagnostics:
        return None, diagnostics
    return doc, []


def parse(text: Union[str, bytes], source: Optional[str] = None) -> TaskDocument:
    """Parse and validate a taskdl document

    Args:
        text: Document text (UTF-8 bytes are accepted)
        source: File name used to prefix diagnostics

    Returns:
        The validated document

    Raises:
        TaskDLError: With one diagnostic per problem found
    """
    doc, diagnostics = _parse(text)
    if doc is None:
        raise TaskDLError(diagnostics, source)
    logger.debug(
        "Parsed %s: %d tasks, %d bodies",
        source or "<text>",
        len(doc.tasks),
        len(doc.bodies),
    )
    return doc


def check(text: Union[str, bytes]) -> List[Diagnostic]:
    """Diagnostics for a document; empty when it is valid"""
    return _parse(text)[1]


def _single_line(text: str) -> _Cursor:
    lines, diagnostics = tokenize(text)
    if diagnostics:
        raise TaskDLError(diagnostics)
    if len(lines) != 1:
        raise TaskDLError([Diagnostic(1, 1, "expected exactly one line")])
    return _Cursor(lines[0])


def parse_expression(text: str) -> Expr:
    """Parse a standalone numeric or boolean expression"""
    c = _single_line(text)
    try:
        expr = _or(c)
        c.finish()
    except _Fail as fail:
        raise TaskDLError([fail.diagnostic]) from None
    return number_channels(expr, "expr", "expr")


def parse_rule(text: str, phase: str = "dyn") -> TransitionRule:
    """Parse ``target <- expression``"""
    c = _single_line(text)
    try:
        return _rule(c, phase)[1]
    except _Fail as fail:
        raise TaskDLError([fail.diagnostic]) from None


def parse_goal(text: str) -> Goal:
    """Parse a ``goal ...`` or ``fail ...`` line"""
    c = _single_line(text)
    try:
        keyword = c.next()
        if keyword.kind != NAME or keyword.text not in ("goal", "fail"):
            raise c.fail("expected 'goal' or 'fail'", keyword)
        return _goal(c, GOAL if keyword.text == "goal" else FAILURE, [])
    except _Fail as fail:
        raise TaskDLError([fail.diagnostic]) from None


def parse_clauses(text: str) -> PartialState:
    """Parse comma-separated clauses such as ``position > 6, time < 5``"""
    c = _single_line(text)
    try:
        target = _clauses(c, [])
        c.finish()
        return target
    except _Fail as fail:
        raise TaskDLError([fail.diagnostic]) from None


__all__ = [
    "parse",
    "check",
    "parse_expression",
    "parse_rule",
    "parse_goal",
    "parse_clauses",
]
