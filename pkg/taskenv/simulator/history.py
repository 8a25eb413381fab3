#!/usr/bin/env python3
"""
Run histories and their JSON-lines / CSV export
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

from ..world import State

PathLike = Union[str, Path]


@dataclass(frozen=True)
class HistoryEntry:
    """One step: the state before, the applied commands, the state after"""

    step: int
    time: float
    pre: State
    commands: Dict[str, float]
    post: State
    violations: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "time": self.time,
            "pre": self.pre,
            "commands": self.commands,
            "post": self.post,
            "violations": list(self.violations),
        }


@dataclass
class History:
    """States S0..Sn of a run plus what was applied between them

    ``commands[i]`` is what the actuators wrote at step i (after latency,
    noise and quantization); ``violations[i]`` lists the relations and
    domains ``states[i]`` breaks.
    """

    dt: float
    states: List[State] = field(default_factory=list)
    commands: List[Dict[str, float]] = field(default_factory=list)
    violations: List[Tuple[str, ...]] = field(default_factory=list)
    horizon_reached: bool = False

    def __len__(self) -> int:
        return len(self.commands)

    @property
    def initial_state(self) -> State:
        return self.states[0]

    @property
    def final_state(self) -> State:
        return self.states[-1]

    def time(self, index: int) -> float:
        return index * self.dt

    def entries(self) -> Iterator[HistoryEntry]:
        for i, command in enumerate(self.commands):
            yield HistoryEntry(
                i,
                self.time(i),
                self.states[i],
                command,
                self.states[i + 1],
                self.violations[i + 1],
            )

    def to_jsonl(self, path: PathLike) -> None:
        """One JSON object per step, keys as in ``HistoryEntry.to_dict``"""
        with open(path, "w", encoding="utf-8") as f:
            for entry in self.entries():
                f.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")

    def to_csv(self, path: PathLike) -> None:
        """One row per state: ``step,t``, one column per variable, then
        one ``cmd_<actuator>`` column per commanded variable and ``violations``"""
        names = sorted(self.states[0])
        commanded = sorted({name for command in self.commands for name in command})
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["step", "t", *names, *(f"cmd_{n}" for n in commanded), "violations"]
            )
            for i, state in enumerate(self.states):
                command = self.commands[i] if i < len(self.commands) else {}
                writer.writerow(
                    [
                        i,
                        repr(self.time(i)),
                        *(repr(state[n]) for n in names),
                        *(repr(command[n]) if n in command else "" for n in commanded),
                        ";".join(self.violations[i]),
                    ]
                )
