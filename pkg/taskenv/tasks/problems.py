#!/usr/bin/env python3
"""
Goals and (compound) problems

An atomic problem is a set of goal states to reach and failure states to
avoid. Compound problems combine sub-problems by conjunction, disjunction,
negation and serial staging. Goal windows are measured from the start of
the (sub)problem that owns them.
"""
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterator, Optional, Tuple, Union

from ..errors import CompositionError, StructuralError
from ..world import INF, PartialState, World

GOAL = "goal"
FAILURE = "failure"


@dataclass(frozen=True)
class Goal:
    """A partial state to reach (polarity goal) or avoid (polarity failure)

    The target must stay covered for ``hold`` seconds (at least one step)
    within ``window``; the window is half-open, ``[start, end)``.
    """

    target: PartialState = field(default_factory=PartialState)
    window: Tuple[float, float] = (0.0, INF)
    hold: float = 0.0
    polarity: str = GOAL

    def __post_init__(self) -> None:
        start, end = (float(self.window[0]), float(self.window[1]))
        object.__setattr__(self, "window", (start, end))
        object.__setattr__(self, "hold", float(self.hold))
        if self.polarity not in (GOAL, FAILURE):
            raise StructuralError(f"Unknown goal polarity {self.polarity!r}")
        if start < 0 or not start < end:
            raise StructuralError(f"Goal window [{start}, {end}) is empty or negative")
        if self.hold < 0 or self.hold > end - start:
            raise StructuralError(
                f"Hold duration {self.hold} must be within "
                f"the window length {end - start}"
            )

    def flipped(self) -> "Goal":
        polarity = FAILURE if self.polarity == GOAL else GOAL
        return Goal(self.target, self.window, self.hold, polarity)

    def variables(self) -> FrozenSet[str]:
        return self.target.variables()

    def sort_key(self) -> tuple:
        bounds = tuple(
            (n, i.lower, i.upper, i.lower_closed, i.upper_closed)
            for n, i in self.target.bounds.items()
        )
        return (self.polarity, bounds, self.window, self.hold)

    def required_steps(self, dt: float) -> int:
        """Number of consecutive covered states that satisfy the hold"""
        return max(1, int(math.ceil(self.hold / dt - 1e-9)))


@dataclass(frozen=True)
class AtomicProblem:
    """Goal states to reach and failure states to avoid"""

    goals: Tuple[Goal, ...] = ()
    failures: Tuple[Goal, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "goals", tuple(sorted(self.goals, key=Goal.sort_key)))
        object.__setattr__(
            self, "failures", tuple(sorted(self.failures, key=Goal.sort_key))
        )
        if any(g.polarity != GOAL for g in self.goals):
            raise StructuralError("Goal list contains a failure state")
        if any(f.polarity != FAILURE for f in self.failures):
            raise StructuralError("Failure list contains a goal state")

    def is_trivial(self) -> bool:
        return not self.goals and not self.failures


@dataclass(frozen=True)
class Conjunction:
    children: Tuple["Problem", ...]


@dataclass(frozen=True)
class Disjunction:
    children: Tuple["Problem", ...]


@dataclass(frozen=True)
class Negation:
    child: "Problem"


@dataclass(frozen=True)
class Stage:
    """One step of a serial problem with its own relative deadline"""

    problem: "Problem"
    deadline: float
    initial: PartialState = field(default_factory=PartialState)

    def __post_init__(self) -> None:
        object.__setattr__(self, "deadline", float(self.deadline))
        if not self.deadline > 0:
            raise StructuralError("Stage deadline must be positive")


@dataclass(frozen=True)
class SerialProblem:
    """Stages solved one after another; each starts when the previous succeeds"""

    stages: Tuple[Stage, ...]

    def __post_init__(self) -> None:
        if not self.stages:
            raise StructuralError("A serial problem needs at least one stage")


Problem = Union[AtomicProblem, Conjunction, Disjunction, Negation, SerialProblem]


def iter_goals(problem: Problem) -> Iterator[Goal]:
    """Every goal and failure state in depth-first order"""
    if isinstance(problem, AtomicProblem):
        yield from problem.goals
        yield from problem.failures
    elif isinstance(problem, (Conjunction, Disjunction)):
        for child in problem.children:
            yield from iter_goals(child)
    elif isinstance(problem, Negation):
        yield from iter_goals(problem.child)
    else:
        for stage in problem.stages:
            yield from iter_goals(stage.problem)


def problem_variables(problem: Problem) -> FrozenSet[str]:
    names: FrozenSet[str] = frozenset()
    for goal in iter_goals(problem):
        names = names | goal.variables()
    if isinstance(problem, SerialProblem):
        for stage in problem.stages:
            names = names | stage.initial.variables()
    return names


def check_problem(problem: Problem, world: World) -> None:
    """Raise if the problem bounds variables the world does not have"""
    for goal in iter_goals(problem):
        goal.target.check_against(world)
    if isinstance(problem, SerialProblem):
        for stage in problem.stages:
            stage.initial.check_against(world)


def _same_world(a: Problem, b: Problem, world: Optional[World]) -> None:
    if world is None:
        return
    for problem in (a, b):
        unknown = sorted(problem_variables(problem) - set(world.names))
        if unknown:
            raise CompositionError(
                f"Problem refers to {unknown[0]!r}, "
                f"which is not in world {world.name!r}"
            )


def conjoin(a: Problem, b: Problem, world: Optional[World] = None) -> Problem:
    """Both sub-problems must succeed on the same history"""
    _same_world(a, b, world)
    return Conjunction((a, b))


def disjoin(a: Problem, b: Problem, world: Optional[World] = None) -> Problem:
    """At least one sub-problem must succeed"""
    _same_world(a, b, world)
    return Disjunction((a, b))


def negate(problem: Problem) -> Problem:
    """Swap goals and failure states, pushing the negation to the leaves

    Conjunctions and disjunctions are exchanged (De Morgan) and a double
    negation cancels, so ``negate(negate(p)) == p``. Serial problems have
    no leaf-level dual; they are wrapped and their outcome is inverted.
    """
    if isinstance(problem, AtomicProblem):
        return AtomicProblem(
            goals=tuple(f.flipped() for f in problem.failures),
            failures=tuple(g.flipped() for g in problem.goals),
        )
    if isinstance(problem, Conjunction):
        return Disjunction(tuple(negate(c) for c in problem.children))
    if isinstance(problem, Disjunction):
        return Conjunction(tuple(negate(c) for c in problem.children))
    if isinstance(problem, Negation):
        return problem.child
    return Negation(problem)


def normalize(problem: Problem) -> Problem:
    """Push every Negation node down to the leaves where possible"""
    if isinstance(problem, Negation):
        inner = normalize(problem.child)
        if isinstance(inner, SerialProblem):
            return Negation(inner)
        return normalize(negate(inner))
    if isinstance(problem, Conjunction):
        return Conjunction(tuple(normalize(c) for c in problem.children))
    if isinstance(problem, Disjunction):
        return Disjunction(tuple(normalize(c) for c in problem.children))
    if isinstance(problem, SerialProblem):
        return SerialProblem(
            tuple(
                Stage(normalize(s.problem), s.deadline, s.initial)
                for s in problem.stages
            )
        )
    return problem
