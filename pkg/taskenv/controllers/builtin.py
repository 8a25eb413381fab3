#!/usr/bin/env python3
"""
Built-in controllers: random-grid, constant, bang-bang and scripted
"""
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..analysis.grid import ActionGrid
from ..errors import DomainError, StructuralError
from ..simulator import Briefing, Observation
from ..world import AgentBody, World
from .base import BaseController, parse_levels


def _check_value(world: World, name: str, value: float) -> None:
    domain = world.domain(name)
    if not domain.contains(value):
        raise DomainError(
            name,
            f"Parameter {name}={value} is outside [{domain.lower}, {domain.upper}]",
        )


def _targets(controller: BaseController, body: AgentBody) -> List[str]:
    name = controller.config.get("actuator")
    if name is None:
        return list(body.actuator_names)
    if name not in body.actuator_names:
        raise StructuralError(f"{name!r} is not an actuator of body {body.name!r}")
    return [str(name)]


class ConstantController(BaseController):
    """Emits the same command every step

    ``constant:0.15`` drives every actuator at 0.15, ``constant:power=0.15``
    names the actuator, and plain ``constant`` is the null action.
    """

    name = "constant"
    description = "Fixed command every step (no value: null action)"
    version = "1.0.0"

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.command: Dict[str, float] = {}

    def validate_config(self) -> bool:
        return all(isinstance(v, (int, float)) for v in self.config.values())

    def bind(self, world: World, body: AgentBody) -> None:
        super().bind(world, body)
        command: Dict[str, float] = {}
        for key, value in self.config.items():
            targets = body.actuator_names if key == "value" else (key,)
            for name in targets:
                if name not in body.actuator_names:
                    raise StructuralError(
                        f"{name!r} is not an actuator of body {body.name!r}"
                    )
                _check_value(world, name, float(value))
                command[name] = float(value)
        self.command = command

    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        return dict(self.command)

    def get_help(self) -> str:
        return (
            f"{self.name}: {self.description}\n"
            "  constant:<v>            every actuator at v\n"
            "  constant:<actuator>=<v> one named actuator"
        )


class RandomGridController(BaseController):
    """Draws a uniformly random grid action at every decision period

    Uses one ``integers(len(actions))`` draw per decision from the run's
    controller stream, exactly as Monte-Carlo sampling does, so both follow
    the same sequence for the same run index.
    """

    name = "random-grid"
    description = "Uniform random action from a grid, held for each decision period"
    version = "1.0.0"

    def __init__(
        self, config: Optional[Dict[str, Any]] = None, grid: Optional[ActionGrid] = None
    ):
        if grid is not None:
            config = {
                "period": grid.period,
                **{f"levels.{a}": list(v) for a, v in grid.levels.items()},
            }
        super().__init__(config)
        self.grid = grid
        self._commands: List[Dict[str, float]] = []
        self._current: Dict[str, float] = {}
        self._decisions = 0

    @classmethod
    def from_grid(cls, grid: ActionGrid) -> "RandomGridController":
        return cls(grid=grid)

    def validate_config(self) -> bool:
        if "period" not in self.config:
            return False
        return any(k == "levels" or k.startswith("levels.") for k in self.config)

    def bind(self, world: World, body: AgentBody) -> None:
        super().bind(world, body)
        if self.grid is None:
            levels = {}
            for name in body.actuator_names:
                value = self.config.get(f"levels.{name}", self.config.get("levels"))
                if value is not None:
                    levels[name] = parse_levels(value)
            if not levels:
                raise StructuralError(
                    f"No grid levels for the actuators of {body.name!r}"
                )
            self.grid = ActionGrid(levels=levels, period=float(self.config["period"]))
        self.grid.check_against(world, body)
        self._commands = [self.grid.command(a) for a in self.grid.actions()]

    def reset(self, rng: np.random.Generator) -> None:
        super().reset(rng)
        self._current = {}
        self._decisions = 0

    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        assert self.grid is not None and self.rng is not None, "controller not bound"
        due = self._decisions * self.grid.period
        if elapsed >= due - 1e-9 * max(1.0, due):
            self._current = self._commands[int(self.rng.integers(len(self._commands)))]
            self._decisions += 1
        return dict(self._current)

    def get_help(self) -> str:
        return (
            f"{self.name}: {self.description}\n"
            "  random-grid:levels=0,5,10;period=0.5\n"
            "  random-grid:levels.<actuator>=...;period=...  per-actuator levels"
        )


class BangBangController(BaseController):
    """Full command below a sensed threshold, low command at or above it"""

    name = "bang-bang"
    description = "Switches between high and low commands on an observed threshold"
    version = "1.0.0"

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.sensor = ""
        self.high: Dict[str, float] = {}
        self.low: Dict[str, float] = {}

    def validate_config(self) -> bool:
        threshold = self.config.get("threshold", self.config.get("value"))
        return isinstance(threshold, (int, float))

    @property
    def threshold(self) -> float:
        return float(self.config.get("threshold", self.config.get("value")))

    def bind(self, world: World, body: AgentBody) -> None:
        super().bind(world, body)
        if not body.sensor_names:
            raise StructuralError(f"Body {body.name!r} has no sensors")
        self.sensor = str(self.config.get("sensor", body.sensor_names[0]))
        if self.sensor not in body.sensor_names:
            raise StructuralError(
                f"{self.sensor!r} is not a sensor of body {body.name!r}"
            )
        self.high, self.low = {}, {}
        for name in _targets(self, body):
            domain = world.domain(name)
            high = float(self.config.get("high", domain.upper))
            low = float(self.config.get("low", domain.lower))
            if not (math.isfinite(high) and math.isfinite(low)):
                raise StructuralError(
                    f"Actuator {name!r} has an unbounded domain; give high and low"
                )
            _check_value(world, name, high)
            _check_value(world, name, low)
            self.high[name] = high
            self.low[name] = low

    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        below = observation[self.sensor] < self.threshold
        return dict(self.high if below else self.low)


class ScriptedController(BaseController):
    """Replays a fixed sequence of values, then issues null actions

    Each value is held for ``period`` seconds, or for one step when no
    period is given.
    """

    name = "scripted"
    description = "Replays a value sequence on the actuators"
    version = "1.0.0"

    def __init__(
        self,
        config: Optional[Dict[str, Any]] = None,
        sequence: Optional[Sequence[float]] = None,
    ):
        if sequence is not None:
            config = {**(config or {}), "values": [float(v) for v in sequence]}
        super().__init__(config)
        self.sequence: tuple = ()
        self.targets: List[str] = []
        self._steps = 0

    def validate_config(self) -> bool:
        period = self.config.get("period")
        if period is not None and (not isinstance(period, (int, float)) or period <= 0):
            return False
        try:
            self._values()
        except (TypeError, ValueError):
            return False
        return True

    def _values(self) -> tuple:
        values = self.config.get("values", self.config.get("value", ()))
        return parse_levels(values)

    def bind(self, world: World, body: AgentBody) -> None:
        super().bind(world, body)
        self.sequence = self._values()
        self.targets = _targets(self, body)
        for name in self.targets:
            for value in self.sequence:
                _check_value(world, name, value)

    def reset(self, rng: np.random.Generator) -> None:
        super().reset(rng)
        self._steps = 0

    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        period = self.config.get("period")
        if period is None:
            index = self._steps
        else:
            index = int(math.floor(elapsed / float(period) + 1e-9))
        self._steps += 1
        if index >= len(self.sequence):
            return {}
        return {name: self.sequence[index] for name in self.targets}
