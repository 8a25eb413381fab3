#!/usr/bin/env python3
"""
Solution-space enumeration and resource-optimal search over action grids

Every sequence of grid actions, each held for one decision period, is
simulated. A branch stops at its first terminal status and stands for all
sequences sharing its prefix, so counts are exact integers.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..errors import EnumerationCapExceeded
from ..simulator import Episode, SimConfig
from ..tasks.task import Task
from ..world import AgentBody, World
from .grid import Action, ActionGrid

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10_000_000


@dataclass(frozen=True)
class GridSolution:
    """A solving action sequence with its completion time and energy spent

    ``actions`` holds the actions applied until success; later decisions do
    not matter and are omitted.
    """

    time: float
    energy: float
    actions: Tuple[Action, ...]

    def time_key(self) -> tuple:
        return (self.time, self.energy, self.actions)

    def energy_key(self) -> tuple:
        return (self.energy, self.time, self.actions)

    def to_dict(self, grid: Optional[ActionGrid] = None) -> dict:
        actions: List[Any] = [list(a) for a in self.actions]
        if grid is not None:
            actions = [grid.command(a) for a in self.actions]
        return {"time": self.time, "energy": self.energy, "actions": actions}


@dataclass(frozen=True)
class EnumerationResult:
    """Counts over all (or sampled) action sequences of a task"""

    n_total: int
    n_solutions: int
    n_half_time: int
    n_half_energy: int
    best_time: Optional[GridSolution] = None
    best_energy: Optional[GridSolution] = None
    method: str = "exact"
    standard_errors: Dict[str, float] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.n_solutions / self.n_total if self.n_total else 0.0

    @property
    def ratio_half_time(self) -> float:
        return self.n_half_time / self.n_total if self.n_total else 0.0

    @property
    def ratio_half_energy(self) -> float:
        return self.n_half_energy / self.n_total if self.n_total else 0.0

    def merge(self, other: "EnumerationResult") -> "EnumerationResult":
        """Combine the results of two disjoint parts of the sequence space"""
        return EnumerationResult(
            self.n_total + other.n_total,
            self.n_solutions + other.n_solutions,
            self.n_half_time + other.n_half_time,
            self.n_half_energy + other.n_half_energy,
            _best(self.best_time, other.best_time, GridSolution.time_key),
            _best(self.best_energy, other.best_energy, GridSolution.energy_key),
            self.method,
        )

    def to_dict(self, grid: Optional[ActionGrid] = None) -> dict:
        return {
            "method": self.method,
            "n_total": self.n_total,
            "n_solutions": self.n_solutions,
            "ratio": self.ratio,
            "ratio_half_time": self.ratio_half_time,
            "ratio_half_energy": self.ratio_half_energy,
            "best_time": self.best_time.to_dict(grid) if self.best_time else None,
            "best_energy": self.best_energy.to_dict(grid) if self.best_energy else None,
            "standard_errors": dict(self.standard_errors),
        }


def _best(
    a: Optional[GridSolution], b: Optional[GridSolution], key: Any
) -> Optional[GridSolution]:
    if a is None or b is None:
        return a or b
    return a if key(a) <= key(b) else b


class _Tally:
    def __init__(self, task: Task, energy_budget: float):
        self.half_time = task.deadline / 2
        self.half_energy = energy_budget / 2
        self.total = self.solutions = self.fast = self.frugal = 0
        self.best_time: Optional[GridSolution] = None
        self.best_energy: Optional[GridSolution] = None

    def record(self, episode: Episode, prefix: Tuple[Action, ...], weight: int) -> None:
        self.total += weight
        status = episode.status
        if not status.is_success:
            return
        assert status.time is not None
        spent = episode.energy_spent
        self.solutions += weight
        if status.time <= self.half_time + 1e-9:
            self.fast += weight
        if spent <= self.half_energy + 1e-9:
            self.frugal += weight
        found = GridSolution(status.time, spent, prefix)
        self.best_time = _best(self.best_time, found, GridSolution.time_key)
        self.best_energy = _best(self.best_energy, found, GridSolution.energy_key)

    def result(self, method: str = "exact") -> EnumerationResult:
        return EnumerationResult(
            self.total,
            self.solutions,
            self.fast,
            self.frugal,
            self.best_time,
            self.best_energy,
            method,
        )


def _hold(episode: Episode, command: Dict[str, float], steps: int) -> None:
    for _ in range(steps):
        if episode.status.is_terminal or episode.horizon_reached():
            return
        episode.apply(command)


def _setup(
    doc: Any, task: Union[Task, str], grid: ActionGrid, cfg: Optional[SimConfig]
):
    if isinstance(task, str):
        task = doc.task(task)
    cfg = cfg or SimConfig.from_document(doc)
    world, body = doc.resolve(task)
    grid.check_against(world, body)
    return task, cfg, world, body


def _duration(task: Task, cfg: SimConfig) -> float:
    return min(task.deadline, cfg.horizon_for(task))


def _explore(
    world: World,
    body: AgentBody,
    task: Task,
    grid: ActionGrid,
    cfg: SimConfig,
    first: Optional[int] = None,
) -> EnumerationResult:
    """Depth-first walk of the action tree, optionally below one first action"""
    actions = grid.actions()
    commands = [grid.command(a) for a in actions]
    steps = grid.steps_per_decision(cfg.delta)
    decisions = grid.decisions(_duration(task, cfg))
    root = Episode(world, body, task, cfg, record=False)
    tally = _Tally(task, root.energy_start - task.energy.floor)

    # (episode, action indices taken, whether the last action is applied yet)
    stack: List[Tuple[Episode, Tuple[int, ...], bool]] = []
    if first is None:
        stack.append((root, (), True))
    elif root.status.is_terminal:
        # Only one partition owns a tree that ends at the start state
        if first == 0:
            stack.append((root, (), True))
    else:
        stack.append((root, (first,), False))

    while stack:
        episode, taken, applied = stack.pop()
        if not applied:
            _hold(episode, commands[taken[-1]], steps)
        depth = len(taken)
        if (
            episode.status.is_terminal
            or depth == decisions
            or episode.horizon_reached()
        ):
            prefix = tuple(actions[i] for i in taken)
            tally.record(episode, prefix, len(actions) ** (decisions - depth))
            continue
        # Push in reverse so the smallest action is explored first
        for index in range(len(actions) - 1, 0, -1):
            stack.append((episode.fork(), taken + (index,), False))
        stack.append((episode, taken + (0,), False))

    return tally.result()


def enumerate_task(
    doc: Any,
    task: Union[Task, str],
    grid: ActionGrid,
    cfg: Optional[SimConfig] = None,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> EnumerationResult:
    """Simulate every action sequence on the grid

    Args:
        doc: TaskDocument
        task: Task or task name
        grid: Action levels and decision period
        cfg: Run configuration (default: the document's ``sim`` line)
        cap: Largest sequence count that may be enumerated
        workers: Processes to split the first decision over

    Returns:
        Exact counts and the best solutions by time and by energy

    Raises:
        EnumerationCapExceeded: The grid has more sequences than ``cap``
    """
    task, cfg, world, body = _setup(doc, task, grid, cfg)
    size = grid.size(_duration(task, cfg))
    if size > cap:
        raise EnumerationCapExceeded(size, cap)
    logger.info("Enumerating %d action sequences of %s", size, task.name)

    count = len(grid.actions())
    if workers <= 1 or count < 2:
        return _explore(world, body, task, grid, cfg)
    with ProcessPoolExecutor(max_workers=min(workers, count)) as pool:
        parts = list(
            pool.map(
                _explore,
                [world] * count,
                [body] * count,
                [task] * count,
                [grid] * count,
                [cfg] * count,
                range(count),
            )
        )
    result = parts[0]
    for part in parts[1:]:
        result = result.merge(part)
    return result


def min_time(
    doc: Any,
    task: Union[Task, str],
    grid: ActionGrid,
    cfg: Optional[SimConfig] = None,
    **kwargs: Any,
) -> Optional[GridSolution]:
    """Fastest solving sequence; ties go to lower energy, then lexicographic
    order. None when no grid sequence solves the task."""
    return enumerate_task(doc, task, grid, cfg, **kwargs).best_time


def min_energy(
    doc: Any,
    task: Union[Task, str],
    grid: ActionGrid,
    cfg: Optional[SimConfig] = None,
    **kwargs: Any,
) -> Optional[GridSolution]:
    """Most frugal solving sequence; ties go to lower time, then lexicographic
    order. None when no grid sequence solves the task."""
    return enumerate_task(doc, task, grid, cfg, **kwargs).best_energy


def _sample(
    world: World,
    body: AgentBody,
    task: Task,
    grid: ActionGrid,
    cfg: SimConfig,
    indices: range,
) -> Tuple[EnumerationResult, int]:
    actions = grid.actions()
    commands = [grid.command(a) for a in actions]
    steps = grid.steps_per_decision(cfg.delta)
    decisions = grid.decisions(_duration(task, cfg))
    tally: Optional[_Tally] = None
    for run_index in indices:
        episode = Episode(world, body, task, cfg, run_index, record=False)
        if tally is None:
            tally = _Tally(task, episode.energy_start - task.energy.floor)
        # Same stream and draw order as the random-grid controller
        rng = episode.streams.generator("controller")
        taken: List[int] = []
        while not episode.status.is_terminal and len(taken) < decisions:
            if episode.horizon_reached():
                break
            taken.append(int(rng.integers(len(actions))))
            _hold(episode, commands[taken[-1]], steps)
        tally.record(episode, tuple(actions[i] for i in taken), 1)
    assert tally is not None
    return tally.result("monte-carlo"), len(indices)


def monte_carlo(
    doc: Any,
    task: Union[Task, str],
    grid: ActionGrid,
    cfg: Optional[SimConfig] = None,
    samples: int = 10_000,
    workers: int = 1,
) -> EnumerationResult:
    """Estimate enumeration results from random grid sequences

    Run ``i`` uses the streams of run index ``i``, so a random-grid
    controller run with the same index follows the same sequence.
    Ratios carry binomial standard errors.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    task, cfg, world, body = _setup(doc, task, grid, cfg)
    logger.info("Sampling %d random action sequences of %s", samples, task.name)

    if workers <= 1:
        result, _ = _sample(world, body, task, grid, cfg, range(samples))
    else:
        bounds = np.linspace(0, samples, workers + 1).astype(int)
        chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        n = len(chunks)
        with ProcessPoolExecutor(max_workers=n) as pool:
            mapped = pool.map(
                _sample,
                [world] * n,
                [body] * n,
                [task] * n,
                [grid] * n,
                [cfg] * n,
                chunks,
            )
            parts = [part for part, _ in mapped]
        result = parts[0]
        for part in parts[1:]:
            result = result.merge(part)

    errors = {
        name: math.sqrt(p * (1 - p) / result.n_total)
        for name, p in (
            ("ratio", result.ratio),
            ("ratio_half_time", result.ratio_half_time),
            ("ratio_half_energy", result.ratio_half_energy),
        )
    }
    return EnumerationResult(
        result.n_total,
        result.n_solutions,
        result.n_half_time,
        result.n_half_energy,
        result.best_time,
        result.best_energy,
        "monte-carlo",
        errors,
    )
