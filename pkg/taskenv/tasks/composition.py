#!/usr/bin/env python3
"""
Serial composition and decomposition of tasks
"""
import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

from ..errors import CompositionError
from ..world import Channel, PartialState, TransitionRule, World
from .problems import AtomicProblem, Goal, SerialProblem, Stage
from .task import Task, trivial_task


def _merge_rules(a: Task, b: Task) -> List[TransitionRule]:
    rules: Dict[str, TransitionRule] = {r.target: r for r in a.after}
    for rule in b.after:
        if rule.target in rules and rules[rule.target] != rule:
            raise CompositionError(
                f"Tasks {a.name!r} and {b.name!r} disagree on the dynamics addition "
                f"for {rule.target!r}"
            )
        rules[rule.target] = rule
    return list(rules.values())


def _merge_channels(a: Task, b: Task) -> Dict[str, Channel]:
    channels = dict(a.channels)
    for key, channel in b.channels.items():
        if key in channels and channels[key] != channel:
            raise CompositionError(
                f"Tasks {a.name!r} and {b.name!r} override channel {key!r} differently"
            )
        channels[key] = channel
    return channels


def _check_chaining(a: Task, b: Task) -> None:
    """b's start conditions must be reachable from a's goal states"""
    if b.initial.is_empty() or not isinstance(a.problem, AtomicProblem):
        return
    for goal in a.problem.goals:
        if goal.target.intersect(b.initial) is None:
            shared = sorted(goal.variables() & b.initial.variables())
            raise CompositionError(
                f"Task {b.name!r} requires {', '.join(shared)} outside the goal "
                f"states of {a.name!r}"
            )


def serial_compose(a: Task, b: Task, name: Optional[str] = None) -> Task:
    """Task that succeeds when a succeeds and then b succeeds

    b's stage starts at the state where a succeeded and has b's deadline;
    the composite deadline is the sum of both, the energy floor the higher
    of the two, and tags, hints and setup are merged.

    Raises:
        CompositionError: Different bodies or energy variables, conflicting
            setup, or b's start conditions contradict a's goals
    """
    if a.body != b.body:
        raise CompositionError(f"Tasks {a.name!r} and {b.name!r} use different bodies")
    if a.energy.variable != b.energy.variable:
        raise CompositionError(
            f"Tasks {a.name!r} and {b.name!r} budget different energy variables"
        )
    _check_chaining(a, b)
    tags = dict(a.tags)
    tags.update(b.tags)
    return Task(
        name=name or f"{a.name}_then_{b.name}",
        problem=SerialProblem(
            (
                Stage(a.problem, a.deadline),
                Stage(b.problem, b.deadline, b.initial),
            )
        ),
        body=a.body,
        deadline=a.deadline + b.deadline,
        energy=replace(a.energy, floor=max(a.energy.floor, b.energy.floor)),
        communication=a.communication,
        initial=a.initial,
        start=a.start,
        after=tuple(_merge_rules(a, b)),
        channels=_merge_channels(a, b),
        hints=a.hints + tuple(h for h in b.hints if h not in a.hints),
        tags=tags,
    )


def decompose_serial(
    task: Task,
    milestones: Sequence[PartialState],
    segment_deadlines: Optional[Sequence[float]] = None,
    world: Optional[World] = None,
) -> List[Task]:
    """Split an atomic task into segments that pass through milestones

    Segment ``i`` must reach milestone ``i``; the last segment solves the
    original problem. Every segment inherits the task's failure states.

    Args:
        task: Task with an atomic problem
        milestones: Ordered intermediate goal states
        segment_deadlines: One relative deadline per segment (defaults to
            an equal split); they may not add up to more than the deadline
        world: When given, milestones are checked against its domains

    Returns:
        Tasks whose serial composition stands in for ``task``

    Raises:
        CompositionError: Compound problem or inconsistent deadlines
        DomainError: A milestone lies outside a domain
    """
    if not milestones:
        return [task]
    if not isinstance(task.problem, AtomicProblem):
        raise CompositionError("Only tasks with an atomic problem can be decomposed")
    if world is not None:
        for milestone in milestones:
            milestone.check_against(world)

    goals = task.problem.goals
    if len(milestones) == 1 and len(goals) == 1 and milestones[0] == goals[0].target:
        return [task, trivial_task(task)]

    count = len(milestones) + 1
    if segment_deadlines is None:
        deadlines = [task.deadline / count] * count
    else:
        deadlines = [float(d) for d in segment_deadlines]
        if len(deadlines) != count:
            raise CompositionError(
                f"Expected {count} segment deadlines, got {len(deadlines)}"
            )
        if any(d <= 0 for d in deadlines):
            raise CompositionError("Segment deadlines must be positive")
        if math.fsum(deadlines) > task.deadline * (1 + 1e-9):
            raise CompositionError(
                f"Segment deadlines add up to {math.fsum(deadlines)}, more than "
                f"the task deadline {task.deadline}"
            )

    failures = task.problem.failures
    segments = []
    previous = task.initial
    for index, milestone in enumerate(milestones):
        problem = AtomicProblem(goals=(Goal(milestone),), failures=failures)
        segments.append(
            replace(
                task,
                name=f"{task.name}_part{index}",
                problem=problem,
                deadline=deadlines[index],
                initial=previous,
            )
        )
        previous = milestone
    segments.append(
        replace(
            task,
            name=f"{task.name}_part{len(milestones)}",
            deadline=deadlines[-1],
            initial=previous,
        )
    )
    return segments


def compose_all(tasks: Sequence[Task], name: Optional[str] = None) -> Task:
    """Left fold of serial_compose over a task list"""
    if not tasks:
        raise CompositionError("Nothing to compose")
    result = tasks[0]
    for task in tasks[1:]:
        result = serial_compose(result, task)
    return replace(result, name=name) if name else result
