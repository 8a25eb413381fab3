#!/usr/bin/env python3
"""
Discrete action grids for enumeration and random controllers
"""
import itertools
import math
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import DomainError, StructuralError
from ..world import AgentBody, World

Action = Tuple[float, ...]


class ActionGrid(BaseModel):
    """Levels per actuator plus the decision period

    An action assigns one level to every actuator in the grid; it is held
    for one decision period. Actions are ordered lexicographically by their
    levels, actuators taken in name order.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    levels: Dict[str, Tuple[float, ...]] = Field(description="Levels per actuator")
    period: float = Field(gt=0, description="Decision period in seconds")

    @field_validator("levels")
    @classmethod
    def _sorted_levels(
        cls, value: Dict[str, Tuple[float, ...]]
    ) -> Dict[str, Tuple[float, ...]]:
        if not value:
            raise ValueError("an action grid needs at least one actuator")
        cleaned = {}
        for name, levels in sorted(value.items()):
            if not levels:
                raise ValueError(f"no levels given for {name!r}")
            if not all(math.isfinite(v) for v in levels):
                raise ValueError(f"levels of {name!r} must be finite")
            cleaned[name] = tuple(sorted(set(float(v) for v in levels)))
        return cleaned

    @classmethod
    def uniform(
        cls, name: str, low: float, high: float, count: int, period: float
    ) -> "ActionGrid":
        """``count`` evenly spaced levels from ``low`` to ``high``"""
        if count < 1:
            raise ValueError("count must be at least 1")
        if count == 1:
            return cls(levels={name: (low,)}, period=period)
        step = (high - low) / (count - 1)
        levels = tuple(low + i * step for i in range(count))
        return cls(levels={name: levels}, period=period)

    @property
    def actuators(self) -> Tuple[str, ...]:
        return tuple(self.levels)

    def actions(self) -> List[Action]:
        return list(itertools.product(*self.levels.values()))

    def command(self, action: Action) -> Dict[str, float]:
        return dict(zip(self.levels, action))

    def steps_per_decision(self, dt: float) -> int:
        """Decision period in simulation steps

        Raises:
            StructuralError: The period is shorter than or not a multiple of dt
        """
        ratio = self.period / dt
        steps = round(ratio)
        if steps < 1 or abs(ratio - steps) > 1e-6 * max(1.0, ratio):
            raise StructuralError(
                f"Decision period {self.period} is not a positive multiple "
                f"of delta {dt}"
            )
        return int(steps)

    def decisions(self, duration: float) -> int:
        """Decisions needed to cover ``duration`` seconds"""
        return max(1, math.ceil(duration / self.period - 1e-9))

    def size(self, duration: float) -> int:
        """Number of distinct action sequences over ``duration``"""
        return len(self.actions()) ** self.decisions(duration)

    def check_against(self, world: World, body: AgentBody) -> None:
        """Every grid actuator must belong to the body, every level to its domain"""
        for name, levels in self.levels.items():
            if name not in body.actuator_names:
                raise StructuralError(
                    f"{name!r} is not an actuator of body {body.name!r}"
                )
            domain = world.domain(name)
            for level in levels:
                if not domain.contains(level):
                    raise DomainError(
                        name, f"Level {level} of {name!r} is outside its domain"
                    )
