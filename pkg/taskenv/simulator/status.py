#!/usr/bin/env python3
"""
Task status and the incremental trackers that compute it

A tracker is fed the states of a history one at a time and reports when
the (sub)problem it watches succeeds or fails. Trackers are cloneable so
the enumerator can branch a run without replaying it.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Mapping, Optional, Tuple

from ..tasks.problems import (
    AtomicProblem,
    Conjunction,
    Disjunction,
    Goal,
    Negation,
    Problem,
    SerialProblem,
    negate,
)
from ..tasks.task import Task
from ..world import INF, covers


class Outcome(str, Enum):
    IN_PROGRESS = "in-progress"
    SUCCESS = "success"
    FAILURE = "failure"


class FailureCause(str, Enum):
    FAILURE_STATE = "failure-state"
    DEADLINE = "deadline-exceeded"
    ENERGY = "energy-exhausted"
    HORIZON = "horizon-reached"


@dataclass(frozen=True)
class TaskStatus:
    """In progress, success (with completion time) or failure (with cause)"""

    outcome: Outcome = Outcome.IN_PROGRESS
    time: Optional[float] = None
    step: Optional[int] = None
    cause: Optional[FailureCause] = None

    @classmethod
    def success(cls, step: int, time: float) -> "TaskStatus":
        return cls(Outcome.SUCCESS, time, step)

    @classmethod
    def failure(cls, cause: FailureCause, step: int, time: float) -> "TaskStatus":
        return cls(Outcome.FAILURE, time, step, cause)

    @property
    def is_terminal(self) -> bool:
        return self.outcome != Outcome.IN_PROGRESS

    @property
    def is_success(self) -> bool:
        return self.outcome == Outcome.SUCCESS

    @property
    def is_failure(self) -> bool:
        return self.outcome == Outcome.FAILURE

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "time": self.time,
            "step": self.step,
            "cause": self.cause.value if self.cause else None,
        }

    def __str__(self) -> str:
        if self.outcome == Outcome.SUCCESS:
            return f"success at t={self.time:.6g}"
        if self.outcome == Outcome.FAILURE:
            assert self.cause is not None
            return f"failure ({self.cause.value}) at t={self.time:.6g}"
        return "in-progress"


# A node result: None while pending, else (succeeded, cause-if-failed)
Verdict = Optional[Tuple[bool, Optional[FailureCause]]]
_SUCCESS: Verdict = (True, None)


def _eps(dt: float) -> float:
    return dt * 1e-6


class _GoalCounter:
    """Consecutive-coverage counter for one goal or failure state"""

    __slots__ = ("goal", "start", "end", "required", "run", "done")

    def __init__(self, goal: Goal, dt: float, deadline: float):
        self.goal = goal
        self.start = goal.window[0]
        self.end = min(goal.window[1], deadline)
        self.required = goal.required_steps(dt)
        self.run = 0
        self.done = False

    def feed(self, t: float, state: Mapping[str, float], eps: float) -> None:
        inside = self.start - eps <= t < self.end - eps
        if inside and covers(self.goal.target, state):
            self.run += 1
            if self.run >= self.required:
                self.done = True
        else:
            self.run = 0

    def expired(self, t: float, eps: float) -> bool:
        return t >= self.end - eps

    def clone(self) -> "_GoalCounter":
        twin = _GoalCounter.__new__(_GoalCounter)
        for name in self.__slots__:
            setattr(twin, name, getattr(self, name))
        return twin


class _Tracker:
    verdict: Verdict = None

    def update(self, k: int, state: Mapping[str, float]) -> Verdict:
        raise NotImplementedError

    def clone(self) -> "_Tracker":
        raise NotImplementedError


class _AtomicTracker(_Tracker):
    def __init__(self, problem: AtomicProblem, dt: float, start: int, deadline: float):
        self.dt = dt
        self.start = start
        self.goals = [_GoalCounter(g, dt, deadline) for g in problem.goals]
        self.failures = [_GoalCounter(f, dt, deadline) for f in problem.failures]
        # Pure avoidance succeeds once every failure window has closed
        self.quiet_after = max((f.end for f in self.failures), default=0.0)
        self.verdict = None

    def update(self, k: int, state: Mapping[str, float]) -> Verdict:
        if self.verdict is not None:
            return self.verdict
        t = (k - self.start) * self.dt
        eps = _eps(self.dt)
        for counter in self.failures:
            counter.feed(t, state, eps)
            if counter.done:
                self.verdict = (False, FailureCause.FAILURE_STATE)
                return self.verdict
        pending = False
        for counter in self.goals:
            if counter.done:
                continue
            counter.feed(t, state, eps)
            if counter.done:
                continue
            if counter.expired(t, eps):
                self.verdict = (False, FailureCause.DEADLINE)
                return self.verdict
            pending = True
        if pending:
            return None
        if self.goals or t >= self.quiet_after - eps:
            self.verdict = _SUCCESS
        return self.verdict

    def clone(self) -> "_AtomicTracker":
        twin = _AtomicTracker.__new__(_AtomicTracker)
        twin.dt = self.dt
        twin.start = self.start
        twin.goals = [c.clone() for c in self.goals]
        twin.failures = [c.clone() for c in self.failures]
        twin.quiet_after = self.quiet_after
        twin.verdict = self.verdict
        return twin


class _CombinationTracker(_Tracker):
    """Conjunction (``need_all``) or disjunction of sub-problems"""

    def __init__(self, children: List[_Tracker], need_all: bool):
        self.children = children
        self.need_all = need_all
        self.verdict = None

    def update(self, k: int, state: Mapping[str, float]) -> Verdict:
        if self.verdict is not None:
            return self.verdict
        results = [child.update(k, state) for child in self.children]
        decisive = not self.need_all  # a success decides a disjunction
        for result in results:
            if result is not None and result[0] == decisive:
                self.verdict = result
                return result
        if all(r is not None for r in results):
            # Every child resolved the other way
            self.verdict = _SUCCESS if self.need_all else results[-1]
        return self.verdict

    def clone(self) -> "_CombinationTracker":
        twin = _CombinationTracker.__new__(_CombinationTracker)
        twin.children = [c.clone() for c in self.children]
        twin.need_all = self.need_all
        twin.verdict = self.verdict
        return twin


class _InvertedTracker(_Tracker):
    """Negation of a serial problem: succeeds when the operand fails"""

    def __init__(self, child: _Tracker):
        self.child = child
        self.verdict = None

    def update(self, k: int, state: Mapping[str, float]) -> Verdict:
        if self.verdict is not None:
            return self.verdict
        result = self.child.update(k, state)
        if result is not None:
            self.verdict = (
                (False, FailureCause.FAILURE_STATE) if result[0] else _SUCCESS
            )
        return self.verdict

    def clone(self) -> "_InvertedTracker":
        twin = _InvertedTracker(self.child.clone())
        twin.verdict = self.verdict
        return twin


class _SerialTracker(_Tracker):
    """Stages one after another; a stage starts at the state where the
    previous one succeeded"""

    def __init__(self, problem: SerialProblem, dt: float, start: int):
        self.problem = problem
        self.dt = dt
        self.index = 0
        self.stage_start = start
        self.current: Optional[_Tracker] = None
        self.verdict = None

    def update(self, k: int, state: Mapping[str, float]) -> Verdict:
        if self.verdict is not None:
            return self.verdict
        eps = _eps(self.dt)
        while True:
            stage = self.problem.stages[self.index]
            if self.current is None:
                if not covers(stage.initial, state):
                    self.verdict = (False, FailureCause.FAILURE_STATE)
                    return self.verdict
                self.stage_start = k
                self.current = build_tracker(stage.problem, self.dt, k, stage.deadline)
            result = self.current.update(k, state)
            if result is None:
                if (k - self.stage_start) * self.dt >= stage.deadline - eps:
                    self.verdict = (False, FailureCause.DEADLINE)
                return self.verdict
            if not result[0]:
                self.verdict = result
                return result
            self.index += 1
            self.current = None
            if self.index == len(self.problem.stages):
                self.verdict = _SUCCESS
                return self.verdict

    def clone(self) -> "_SerialTracker":
        twin = _SerialTracker.__new__(_SerialTracker)
        twin.problem = self.problem
        twin.dt = self.dt
        twin.index = self.index
        twin.stage_start = self.stage_start
        twin.current = self.current.clone() if self.current is not None else None
        twin.verdict = self.verdict
        return twin


def build_tracker(
    problem: Problem, dt: float, start: int = 0, deadline: float = INF
) -> _Tracker:
    """Tracker for a (sub)problem that begins at state index ``start``"""
    if isinstance(problem, AtomicProblem):
        return _AtomicTracker(problem, dt, start, deadline)
    if isinstance(problem, (Conjunction, Disjunction)):
        return _CombinationTracker(
            [build_tracker(c, dt, start, deadline) for c in problem.children],
            need_all=isinstance(problem, Conjunction),
        )
    if isinstance(problem, Negation):
        if isinstance(problem.child, SerialProblem):
            return _InvertedTracker(build_tracker(problem.child, dt, start, deadline))
        return build_tracker(negate(problem.child), dt, start, deadline)
    return _SerialTracker(problem, dt, start)


class TaskTracker:
    """Status of a task as states arrive; terminal statuses are absorbing

    At one state the checks run in this order: start conditions (first
    state only), energy floor, problem failure, problem success, deadline.
    """

    def __init__(self, task: Task, dt: float):
        self.task = task
        self.dt = dt
        self.root = build_tracker(task.problem, dt, 0, task.deadline)
        self.status = TaskStatus()
        self.steps = 0

    def update(self, k: int, state: Mapping[str, float]) -> TaskStatus:
        if self.status.is_terminal:
            return self.status
        self.steps = k + 1
        t = k * self.dt
        eps = _eps(self.dt)
        if k == 0 and not covers(self.task.initial, state):
            self.status = TaskStatus.failure(FailureCause.FAILURE_STATE, k, t)
        elif state[self.task.energy.variable] <= self.task.energy.floor:
            self.status = TaskStatus.failure(FailureCause.ENERGY, k, t)
        else:
            result = self.root.update(k, state)
            if result is not None and not result[0]:
                assert result[1] is not None
                self.status = TaskStatus.failure(result[1], k, t)
            elif result is not None:
                self.status = TaskStatus.success(k, t)
            elif t >= self.task.deadline - eps:
                self.status = TaskStatus.failure(FailureCause.DEADLINE, k, t)
        return self.status

    def clone(self) -> "TaskTracker":
        twin = TaskTracker.__new__(TaskTracker)
        twin.task = self.task
        twin.dt = self.dt
        twin.root = self.root.clone()
        twin.status = self.status
        twin.steps = self.steps
        return twin
