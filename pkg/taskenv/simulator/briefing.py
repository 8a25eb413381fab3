#!/usr/bin/env python3
"""
What a controller is told about its task, per communication mode
"""
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from ..taskdl.serializer import task_lines
from ..tasks.problems import GOAL, iter_goals
from ..tasks.task import Communication, Task
from ..world import covers


@dataclass(frozen=True)
class Briefing:
    """Task information handed to the controller every step

    ``description`` is the task's taskdl text (full-description mode only),
    ``flags`` tells per goal whether the current state covers it
    (incremental-reinforcement mode only) and ``hints`` carries the task's
    hint texts (hints mode only).
    """

    mode: Communication
    description: Optional[str] = None
    hints: Tuple[str, ...] = ()
    flags: Tuple[bool, ...] = ()

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "description": self.description,
            "hints": list(self.hints),
            "flags": list(self.flags),
        }


def goal_flags(task: Task, state: Mapping[str, float]) -> Tuple[bool, ...]:
    return tuple(
        covers(goal.target, state)
        for goal in iter_goals(task.problem)
        if goal.polarity == GOAL
    )


def brief(task: Task, state: Mapping[str, float]) -> Briefing:
    if task.communication == Communication.FULL:
        return Briefing(task.communication, description="\n".join(task_lines(task)))
    if task.communication == Communication.HINTS:
        return Briefing(task.communication, hints=task.hints)
    return Briefing(task.communication, flags=goal_flags(task, state))
