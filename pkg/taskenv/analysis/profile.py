#!/usr/bin/env python3
"""
Task profiles: a vector of quantitative measures per task
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import EnumerationCapExceeded
from ..simulator import Episode, SimConfig, run
from ..tasks.task import Task
from ..world import AgentBody, World
from .enumeration import DEFAULT_CAP, EnumerationResult, enumerate_task, monte_carlo
from .grid import ActionGrid

logger = logging.getLogger(__name__)

DIMENSIONS = (
    "success_ratio",
    "ratio_half_time",
    "ratio_half_energy",
    "min_time",
    "min_energy",
    "observability",
    "controllability",
    "dynamism",
    "stochasticity",
    "continuity",
    "determinism",
)


class TaskProfile(BaseModel):
    """Named measures of one task; dimensions that cannot be measured are absent"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    task: str
    method: Literal["exact", "monte-carlo"] = "exact"
    measures: Dict[str, float] = Field(default_factory=dict)
    standard_errors: Dict[str, float] = Field(default_factory=dict)

    @property
    def dimensions(self) -> tuple:
        return tuple(d for d in DIMENSIONS if d in self.measures) + tuple(
            sorted(d for d in self.measures if d not in DIMENSIONS)
        )

    def __getitem__(self, name: str) -> float:
        return self.measures[name]

    def get(self, name: str) -> Optional[float]:
        return self.measures.get(name)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.model_dump(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TaskProfile":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))


def observability(world: World, body: AgentBody) -> float:
    return len(body.sensors) / len(world.variables)


def controllability(world: World, body: AgentBody) -> float:
    return len(body.actuators) / len(world.variables)


def dynamism(world: World, body: AgentBody, task: Task, cfg: SimConfig) -> float:
    """Fraction of variables that change at some step under null actions"""
    episode = Episode(world, body, task, cfg)
    steps = int(round(min(task.deadline, episode.horizon) / cfg.delta))
    initial = episode.state
    changed = set()
    for _ in range(steps):
        episode.apply({})
        changed.update(n for n, v in episode.state.items() if v != initial[n])
    return len(changed) / len(world.variables)


def stochasticity(world: World, body: AgentBody) -> float:
    noisy_rules = any(r.expression.has_noise() for r in world.dynamics + world.after)
    noisy_channels = any(c.is_noisy for c in body.sensors + body.actuators)
    return 1.0 if noisy_rules or noisy_channels else 0.0


def continuity(world: World, body: AgentBody) -> float:
    """Fraction of variables with unquantized channels and smooth rules"""
    smooth = 0
    for name in world.names:
        channels = [c for c in body.sensors + body.actuators if c.variable == name]
        rules = [r for r in world.dynamics + world.after if r.target == name]
        if all(c.resolution == 0 for c in channels) and all(
            r.expression.is_smooth() for r in rules
        ):
            smooth += 1
    return smooth / len(world.variables)


def _pairwise_divergence(values: np.ndarray) -> np.ndarray:
    """Mean absolute difference over all pairs of runs, per step and variable"""
    n = values.shape[0]
    ordered = np.sort(values, axis=0)
    weights = (2 * np.arange(n) - n + 1).reshape(n, *([1] * (values.ndim - 1)))
    return (weights * ordered).sum(axis=0) / (n * (n - 1) / 2)


def measure_determinism(
    doc: Any,
    task: Union[Task, str],
    cfg: Optional[SimConfig] = None,
    n_runs: int = 10,
    controller: Any = None,
) -> float:
    """1 minus the normalized divergence of histories across noise seeds

    The controller (default: null actions) is run ``n_runs`` times up to the
    horizon with different run indices. For each variable that differs
    between runs, the divergence is the mean pairwise absolute difference
    per step, averaged over steps and divided by the variable's scale: the
    peak magnitude of its mean trajectory, but at least one unit. Each
    divergence is capped at 1. The result is one minus their mean, and
    exactly 1 when all runs agree.
    """
    if n_runs < 2:
        raise ValueError("n_runs must be at least 2")
    if controller is None:
        # Controllers build on the analysis grid, so import lazily
        from ..controllers.builtin import ConstantController

        controller = ConstantController()
    if isinstance(task, str):
        task = doc.task(task)
    cfg = cfg or SimConfig.from_document(doc)

    histories = [
        run(doc, task, controller, cfg, i, until_horizon=True).history
        for i in range(n_runs)
    ]
    names = sorted(histories[0].states[0])
    length = min(len(h.states) for h in histories)
    values = np.array(
        [[[state[n] for n in names] for state in h.states[:length]] for h in histories]
    )
    spread = _pairwise_divergence(values)  # (steps, variables)
    scale = np.maximum(np.abs(values.mean(axis=0)).max(axis=0), 1.0)
    differs = np.any(values != values[0], axis=(0, 1))
    if not differs.any():
        return 1.0
    divergence = np.minimum(spread.mean(axis=0) / scale, 1.0)[differs]
    return float(np.clip(1.0 - divergence.mean(), 0.0, 1.0))


def _search(
    doc: Any,
    task: Task,
    grid: ActionGrid,
    cfg: SimConfig,
    cap: int,
    samples: int,
    workers: int,
) -> EnumerationResult:
    try:
        return enumerate_task(doc, task, grid, cfg, cap=cap, workers=workers)
    except EnumerationCapExceeded as e:
        logger.info("%s; falling back to %d Monte-Carlo samples", e, samples)
        return monte_carlo(doc, task, grid, cfg, samples, workers)


def profile(
    doc: Any,
    task: Union[Task, str],
    grid: ActionGrid,
    cfg: Optional[SimConfig] = None,
    cap: int = DEFAULT_CAP,
    samples: int = 10_000,
    determinism_runs: int = 10,
    workers: int = 1,
) -> TaskProfile:
    """Measure a task

    Ratios and optimal resources come from exact enumeration, or from
    Monte-Carlo sampling (with standard errors) when the grid is larger
    than ``cap``. ``min_time``/``min_energy`` are absent when no grid
    sequence solves the task.
    """
    if isinstance(task, str):
        task = doc.task(task)
    cfg = cfg or SimConfig.from_document(doc)
    world, body = doc.resolve(task)
    result = _search(doc, task, grid, cfg, cap, samples, workers)

    measures = {
        "success_ratio": result.ratio,
        "ratio_half_time": result.ratio_half_time,
        "ratio_half_energy": result.ratio_half_energy,
        "observability": observability(world, body),
        "controllability": controllability(world, body),
        "dynamism": dynamism(world, body, task, cfg),
        "stochasticity": stochasticity(world, body),
        "continuity": continuity(world, body),
        "determinism": measure_determinism(doc, task, cfg, determinism_runs),
    }
    if result.best_time is not None:
        measures["min_time"] = result.best_time.time
    if result.best_energy is not None:
        measures["min_energy"] = result.best_energy.energy
    errors = {
        "success_ratio" if name == "ratio" else name: value
        for name, value in result.standard_errors.items()
    }
    return TaskProfile(
        task=task.name,
        method="monte-carlo" if result.method == "monte-carlo" else "exact",
        measures=dict(sorted(measures.items())),
        standard_errors=errors,
    )
