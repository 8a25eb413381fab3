#!/usr/bin/env python3
"""
Task: a problem assigned to an agent body, with budgets and setup
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Mapping, Tuple, Union

from ..errors import StructuralError
from ..world import AgentBody, Channel, PartialState, TransitionRule, World
from .problems import AtomicProblem, Problem, check_problem, problem_variables

TagValue = Union[float, str]


class Communication(str, Enum):
    """How the task is communicated to the controller"""

    FULL = "full-description"
    REINFORCEMENT = "incremental-reinforcement"
    HINTS = "hints"

    @property
    def keyword(self) -> str:
        """Short form used in taskdl ``mode`` lines"""
        short = {
            "full-description": "full",
            "incremental-reinforcement": "reinforcement",
        }
        return short.get(self.value, self.value)

    @classmethod
    def from_keyword(cls, word: str) -> "Communication":
        for mode in cls:
            if word in (mode.keyword, mode.value):
                return mode
        raise StructuralError(f"Unknown communication mode {word!r}")


@dataclass(frozen=True)
class EnergyBudget:
    """Energy variable and the floor at or below which the agent is out of energy"""

    variable: str
    floor: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "floor", float(self.floor))


@dataclass(frozen=True)
class Task:
    """A problem assigned to an agent, with deadline and energy budget

    ``initial`` holds the conditions the start state must satisfy; ``start``,
    ``after`` and ``channels`` adjust the world and body for this task only.
    """

    name: str
    problem: Problem
    body: str
    deadline: float
    energy: EnergyBudget
    communication: Communication = Communication.FULL
    initial: PartialState = field(default_factory=PartialState)
    start: Dict[str, float] = field(default_factory=dict)
    after: Tuple[TransitionRule, ...] = ()
    channels: Dict[str, Channel] = field(default_factory=dict)
    hints: Tuple[str, ...] = ()
    tags: Dict[str, TagValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name.isidentifier():
            raise StructuralError(f"Invalid task name: {self.name!r}")
        object.__setattr__(self, "deadline", float(self.deadline))
        if not self.deadline > 0:
            raise StructuralError(f"Task {self.name!r}: deadline must be positive")
        object.__setattr__(
            self, "start", {k: float(v) for k, v in sorted(self.start.items())}
        )
        object.__setattr__(
            self, "after", tuple(sorted(self.after, key=lambda r: r.target))
        )
        object.__setattr__(self, "channels", dict(sorted(self.channels.items())))
        for key in self.channels:
            kind, _, variable = key.partition(":")
            if kind not in ("sensor", "actuator") or not variable:
                raise StructuralError(
                    f"Task {self.name!r}: bad channel override {key!r}"
                )
        object.__setattr__(self, "tags", dict(sorted(self.tags.items())))

    def variables(self) -> FrozenSet[str]:
        return (
            problem_variables(self.problem)
            | self.initial.variables()
            | {self.energy.variable}
        )

    def renamed(self, name: str) -> "Task":
        return replace(self, name=name)

    def with_tags(self, tags: Mapping[str, TagValue]) -> "Task":
        merged = dict(self.tags)
        merged.update(tags)
        return replace(self, tags=merged)

    def setup(self, world: World, body: AgentBody) -> Tuple[World, AgentBody]:
        """The world and body this task actually runs in

        Raises:
            StructuralError: If a reference does not resolve in the world or body
        """
        effective_world = world
        if self.start:
            effective_world = effective_world.with_initial(self.start)
        if self.after:
            effective_world = effective_world.with_after(self.after)
        effective_body = body.with_overrides(self.channels) if self.channels else body
        effective_body.check_against(effective_world)
        effective_world.variable(self.energy.variable)
        self.initial.check_against(effective_world)
        check_problem(self.problem, effective_world)
        return effective_world, effective_body


def trivial_problem() -> Problem:
    return AtomicProblem()


def trivial_task(template: Task, deadline: float = 1.0) -> Task:
    """Identity element of serial composition: succeeds at its first state"""
    return Task(
        name=f"{template.name}_trivial",
        problem=trivial_problem(),
        body=template.body,
        deadline=deadline,
        energy=template.energy,
        communication=template.communication,
    )
