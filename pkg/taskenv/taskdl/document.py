#!/usr/bin/env python3
"""
TaskDocument: a world, its agent bodies, tasks and variant specs
"""
import math
from dataclasses import dataclass, field
from typing import Tuple, Union

from ..errors import StructuralError
from ..tasks.task import Task
from ..tasks.variants import VariantSpec
from ..world import AgentBody, World


@dataclass(frozen=True)
class SimDefaults:
    """Document-level simulation defaults (``sim`` line)"""

    delta: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", float(self.delta))
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise StructuralError("sim delta must be a positive number")
        if int(self.seed) != self.seed or self.seed < 0:
            raise StructuralError("sim seed must be a non-negative integer")
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class TaskDocument:
    """Everything one ``.taskdl`` file defines

    Bodies, tasks and variants are kept sorted by name; cross references
    (body channels to world variables, tasks to bodies, variants to tasks)
    are checked on construction.
    """

    world: World
    bodies: Tuple[AgentBody, ...] = ()
    tasks: Tuple[Task, ...] = ()
    variants: Tuple[VariantSpec, ...] = ()
    sim: SimDefaults = field(default_factory=SimDefaults)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "bodies", tuple(sorted(self.bodies, key=lambda b: b.name))
        )
        object.__setattr__(
            self, "tasks", tuple(sorted(self.tasks, key=lambda t: t.name))
        )
        object.__setattr__(
            self, "variants", tuple(sorted(self.variants, key=lambda v: v.name))
        )
        for kind, items in (
            ("body", self.bodies),
            ("task", self.tasks),
            ("variant", self.variants),
        ):
            names = [item.name for item in items]
            if len(set(names)) != len(names):
                raise StructuralError(f"Duplicate {kind} name in document")
        for body in self.bodies:
            body.check_against(self.world)
        for task in self.tasks:
            self.resolve(task)
        for spec in self.variants:
            self.task(spec.base)

    def body(self, name: str) -> AgentBody:
        for body in self.bodies:
            if body.name == name:
                return body
        raise StructuralError(f"Unknown body {name!r}")

    def task(self, name: str) -> Task:
        for task in self.tasks:
            if task.name == name:
                return task
        raise StructuralError(f"Unknown task {name!r}")

    def variant(self, name: str) -> VariantSpec:
        for spec in self.variants:
            if spec.name == name:
                return spec
        raise StructuralError(f"Unknown variant {name!r}")

    @property
    def task_names(self) -> Tuple[str, ...]:
        return tuple(t.name for t in self.tasks)

    @property
    def default_task(self) -> Task:
        if not self.tasks:
            raise StructuralError("Document defines no tasks")
        return self.tasks[0]

    def resolve(self, task: Union[Task, str]) -> Tuple[World, AgentBody]:
        """Effective world and body for a task (start overrides, dynamics
        additions and channel overrides applied)"""
        if isinstance(task, str):
            task = self.task(task)
        return task.setup(self.world, self.body(task.body))

    def with_tasks(self, tasks: Tuple[Task, ...]) -> "TaskDocument":
        """Copy of the document with extra tasks added"""
        return TaskDocument(
            self.world, self.bodies, self.tasks + tuple(tasks), self.variants, self.sim
        )
