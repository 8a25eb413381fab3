#!/usr/bin/env python3
"""
Abstraction (widening/dropping goal bounds) and concretization
"""
import math
from dataclasses import replace
from typing import Iterable, Mapping, Optional

from ..errors import StructuralError
from ..world import Interval, PartialState, World
from .problems import (
    GOAL,
    AtomicProblem,
    Conjunction,
    Disjunction,
    Negation,
    Problem,
    SerialProblem,
    Stage,
    iter_goals,
    negate,
)
from .task import Task


def scale_interval(interval: Interval, factor: float, anchor: float) -> Interval:
    """Widen (factor > 1) or narrow (factor < 1) an interval

    Finite intervals scale about their centre. A half-infinite bound moves
    relative to ``anchor`` (the task's start value): away from it when the
    anchor is inside the interval, towards it when the anchor is outside.
    """
    if factor == 1 or interval.is_unbounded:
        return interval
    lower, upper = interval.lower, interval.upper
    if interval.is_bounded:
        centre = interval.center
        half = interval.width / 2 * factor
        return replace(interval, lower=centre - half, upper=centre + half)
    inside = interval.contains(anchor)
    if math.isfinite(lower):
        offset = lower - anchor
        lower = anchor + (offset * factor if inside else offset / factor)
    else:
        offset = upper - anchor
        upper = anchor + (offset * factor if inside else offset / factor)
    return replace(interval, lower=lower, upper=upper)


def _scale_target(
    target: PartialState, factors: Mapping[str, float], anchors: Mapping[str, float]
) -> PartialState:
    bounds = {}
    for name, interval in target.bounds.items():
        factor = factors.get(name, 1.0)
        half_infinite = not (interval.is_bounded or interval.is_unbounded)
        if factor != 1 and half_infinite and name not in anchors:
            raise StructuralError(
                f"Scaling the half-infinite bound on {name!r} needs its start "
                "value: pass the world or set it with 'start'"
            )
        bounds[name] = scale_interval(interval, factor, anchors.get(name, 0.0))
    return PartialState(bounds)


def _transform(
    problem: Problem,
    factors: Mapping[str, float],
    anchors: Mapping[str, float],
    drop: frozenset,
    restore: Mapping[str, Interval],
) -> Problem:
    if isinstance(problem, AtomicProblem):
        goals = []
        for goal in problem.goals:
            target = _scale_target(goal.target, factors, anchors).without(drop)
            missing = {k: v for k, v in restore.items() if k not in target.bounds}
            if missing:
                target = PartialState({**target.bounds, **missing})
            goals.append(replace(goal, target=target))
        inverse = {name: 1.0 / f for name, f in factors.items()}
        failures = [
            replace(f, target=_scale_target(f.target, inverse, anchors))
            for f in problem.failures
            if not (f.variables() & drop)
        ]
        return AtomicProblem(tuple(goals), tuple(failures))
    if isinstance(problem, Conjunction):
        return Conjunction(
            tuple(
                _transform(c, factors, anchors, drop, restore)
                for c in problem.children
            )
        )
    if isinstance(problem, Disjunction):
        return Disjunction(
            tuple(
                _transform(c, factors, anchors, drop, restore)
                for c in problem.children
            )
        )
    if isinstance(problem, Negation):
        if isinstance(problem.child, SerialProblem):
            return Negation(_transform(problem.child, factors, anchors, drop, restore))
        # Transform the dual so goals under the negation are treated as failures
        dual = _transform(negate(problem.child), factors, anchors, drop, restore)
        return Negation(negate(dual))
    return SerialProblem(
        tuple(
            Stage(
                _transform(s.problem, factors, anchors, drop, restore),
                s.deadline,
                s.initial.without(drop),
            )
            for s in problem.stages
        )
    )


def _anchors(task: Task, world: Optional[World]) -> Mapping[str, float]:
    if world is None:
        return dict(task.start)
    values = dict(world.initial_state)
    values.update(task.start)
    return values


def abstract(
    task: Task,
    widen: Mapping[str, float],
    drop: Iterable[str] = (),
    world: Optional[World] = None,
) -> Task:
    """Easier version of a task

    Goal intervals are widened by their variable's factor, failure regions
    shrink by the same factor, and dropped variables disappear from goal
    targets and start conditions (failure states that mention them are
    removed). For tasks without serial stages every history that solves
    ``task`` also solves the result.

    Args:
        task: Task to abstract
        widen: Factor >= 1 per variable
        drop: Variables to remove from the problem
        world: World whose start state anchors half-infinite bounds; may
            be left out when the task's ``start`` sets every such variable

    Raises:
        StructuralError: If a factor is below 1, or a half-infinite bound
            to scale has no start value
    """
    for name, factor in widen.items():
        if not factor >= 1 or not math.isfinite(factor):
            raise StructuralError(
                f"Abstraction factor for {name!r} must be >= 1, got {factor}"
            )
    dropped = frozenset(drop)
    problem = _transform(task.problem, widen, _anchors(task, world), dropped, {})
    return replace(task, problem=problem, initial=task.initial.without(dropped))


def concretize(
    task: Task,
    narrow: Mapping[str, float],
    restore: Optional[Mapping[str, Interval]] = None,
    world: Optional[World] = None,
) -> Task:
    """Harder version of a task; the inverse direction of ``abstract``

    Args:
        task: Task to concretize
        narrow: Factor in (0, 1] per variable
        restore: Bounds added to every goal target that lacks the variable
        world: World whose start state anchors half-infinite bounds; may
            be left out when the task's ``start`` sets every such variable

    Raises:
        StructuralError: If a factor is outside (0, 1], a restored variable
            is already bounded in some goal, or a half-infinite bound to
            scale has no start value
    """
    for name, factor in narrow.items():
        if not 0 < factor <= 1:
            raise StructuralError(
                f"Concretization factor for {name!r} must be in (0, 1], got {factor}"
            )
    restore = dict(restore or {})
    for goal in iter_goals(task.problem):
        if goal.polarity != GOAL:
            continue
        clash = sorted(goal.variables() & set(restore))
        if clash:
            raise StructuralError(
                f"Cannot restore {clash[0]!r}: it is already bounded in a goal"
            )
    problem = _transform(
        task.problem, narrow, _anchors(task, world), frozenset(), restore
    )
    return replace(task, problem=problem)
