#!/usr/bin/env python3
"""
Discrete-time execution of a world with an attached agent
"""
import logging
from typing import Any, Mapping, NamedTuple, Optional, Protocol, Union

import numpy as np

from ..errors import DomainError, RunAborted, StructuralError
from ..seeding import NoiseStreams
from ..tasks.task import Communication, Task
from ..taskdl.expressions import evaluate
from ..world import AgentBody, State, World, violations
from .briefing import Briefing, brief
from .channels import ActuatorChannels, Observation, sense
from .config import SimConfig
from .history import History
from .status import FailureCause, TaskStatus, TaskTracker

logger = logging.getLogger(__name__)


class Controller(Protocol):
    """Anything that turns observations into actuator commands

    A controller may also define ``bind(world, body)``; ``run`` calls it
    before ``reset``.
    """

    def reset(self, rng: np.random.Generator) -> None:
        ...

    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        ...


def step(
    world: World,
    state: Mapping[str, float],
    commands: Mapping[str, float],
    dt: float,
    streams: Optional[NoiseStreams] = None,
    clamp: bool = False,
) -> State:
    """Advance a state by one step of ``dt`` seconds

    Commands are written into the pre-state first; every transition rule
    then reads that single pre-state and all results are written at once.
    Dynamics additions (``after`` rules) run as a second synchronous phase
    over the result. Variables without a rule keep their value.

    Raises:
        DomainError: A command lies outside its variable's domain and
            ``clamp`` is off
        EvaluationError: A rule cannot be evaluated
    """
    pre = dict(state)
    for name, value in commands.items():
        domain = world.domain(name)
        value = float(value)
        if not domain.contains(value):
            if not clamp:
                raise DomainError(
                    name,
                    f"Command {name}={value} is outside "
                    f"[{domain.lower}, {domain.upper}]",
                )
            value = domain.clip(value)
        pre[name] = value
    post = dict(pre)
    for rule in world.dynamics:
        post[rule.target] = evaluate(rule.expression, pre, dt, streams, str(rule))
    if world.after:
        first = post
        post = dict(first)
        for rule in world.after:
            post[rule.target] = evaluate(rule.expression, first, dt, streams, str(rule))
    return post


class Episode:
    """One run in progress: world state, channel buffers, streams and status

    ``fork`` snapshots everything so the enumerator can explore several
    continuations of the same prefix.
    """

    def __init__(
        self,
        world: World,
        body: AgentBody,
        task: Task,
        cfg: SimConfig,
        run_index: int = 0,
        record: bool = True,
    ):
        self.world = world
        self.body = body
        self.task = task
        self.cfg = cfg
        self.dt = cfg.delta
        self.horizon = cfg.horizon_for(task)
        self.record = record
        self.streams = NoiseStreams(cfg.master_seed, run_index)
        self.actuators = ActuatorChannels(body, world)
        self.allowed = frozenset(body.actuator_names)
        self.k = 0
        self.state: State = dict(world.initial_state)
        self.history = History(
            self.dt, [self.state], [], [tuple(violations(world, self.state))]
        )
        self.tracker = TaskTracker(task, self.dt)
        self.status = self.tracker.update(0, self.state)
        self.energy_start = self.state[task.energy.variable]
        self.violated = bool(self.history.violations[0])
        self._briefing: Optional[Briefing] = None
        if task.communication != Communication.REINFORCEMENT:
            self._briefing = brief(task, self.state)

    @property
    def time(self) -> float:
        return self.k * self.dt

    @property
    def energy_spent(self) -> float:
        return self.energy_start - self.state[self.task.energy.variable]

    def horizon_reached(self) -> bool:
        return self.time >= self.horizon - self.dt * 1e-6

    def observe(self) -> Observation:
        index = len(self.history.states) - 1
        return sense(self.body, self.history, index, self.streams)

    def briefing(self) -> Briefing:
        return self._briefing or brief(self.task, self.state)

    def _checked(self, commands: Mapping[str, float]) -> dict:
        checked = {}
        for name, value in commands.items():
            if name not in self.allowed:
                raise RunAborted(
                    f"Controller commanded {name!r}, which is not an actuator of "
                    f"body {self.body.name!r}"
                )
            value = float(value)
            domain = self.world.domain(name)
            if not domain.contains(value):
                if not self.cfg.clamp_actuators:
                    raise DomainError(
                        name,
                        f"Command {name}={value} is outside "
                        f"[{domain.lower}, {domain.upper}]",
                    )
                value = domain.clip(value)
            checked[name] = value
        return checked

    def apply(self, commands: Mapping[str, float]) -> TaskStatus:
        """Issue commands, advance one step and update the status

        Raises:
            RunAborted: A command targets a variable the body cannot actuate
            DomainError: A command is out of domain and clamping is off
        """
        due = self.actuators.push(self._checked(commands), self.streams)
        post = step(self.world, self.state, due, self.dt, self.streams)
        self.k += 1
        self.state = post
        flagged = tuple(violations(self.world, post))
        if flagged and not self.violated:
            self.violated = True
            logger.warning("t=%.6g: state violates %s", self.time, ", ".join(flagged))
        if self.record:
            self.history.states.append(post)
            self.history.commands.append(due)
            self.history.violations.append(flagged)
        else:
            self.history.states[-1] = post
            self.history.violations[-1] = flagged
        self.status = self.tracker.update(self.k, post)
        return self.status

    def fork(self) -> "Episode":
        twin = Episode.__new__(Episode)
        twin.__dict__.update(self.__dict__)
        twin.streams = self.streams.fork()
        twin.actuators = self.actuators.clone()
        twin.history = History(
            self.dt,
            list(self.history.states),
            list(self.history.commands),
            list(self.history.violations),
            self.history.horizon_reached,
        )
        twin.tracker = self.tracker.clone()
        return twin


class RunResult(NamedTuple):
    history: History
    status: TaskStatus


def run(
    doc: Any,
    task: Union[Task, str],
    controller: Controller,
    cfg: Optional[SimConfig] = None,
    run_index: int = 0,
    until_horizon: bool = False,
) -> RunResult:
    """Simulate one task with one controller

    Each step: status check, horizon check, sense, act, step. The loop ends
    at the first terminal status, or at the horizon when ``until_horizon``
    is set (the reported status is still the first terminal one).

    Args:
        doc: TaskDocument holding the task's world and body
        task: Task or task name
        controller: Object following the ``Controller`` protocol
        cfg: Run configuration (default: the document's ``sim`` line)
        run_index: Index used to derive this run's random streams

    Returns:
        (History, TaskStatus)

    Raises:
        RunAborted: The controller commanded a non-actuator variable
    """
    if isinstance(task, str):
        task = doc.task(task)
    cfg = cfg or SimConfig.from_document(doc)
    world, body = doc.resolve(task)
    episode = Episode(world, body, task, cfg, run_index)
    bind = getattr(controller, "bind", None)
    if bind is not None:
        bind(world, body)
    controller.reset(episode.streams.generator("controller"))
    logger.debug(
        "Run %d of %s: delta=%s seed=%s",
        run_index,
        task.name,
        cfg.delta,
        cfg.master_seed,
    )

    while until_horizon or not episode.status.is_terminal:
        if episode.horizon_reached():
            episode.history.horizon_reached = True
            if not episode.status.is_terminal:
                episode.status = TaskStatus.failure(
                    FailureCause.HORIZON, episode.k, episode.time
                )
            break
        observation = episode.observe()
        commands = controller.act(observation, episode.time, episode.briefing())
        episode.apply(commands)

    logger.debug("Run %d of %s finished: %s", run_index, task.name, episode.status)
    return RunResult(episode.history, episode.status)


def check_status(task: Task, history: History) -> TaskStatus:
    """Status of a task on a recorded history

    Raises:
        StructuralError: The history does not assign a variable the task uses
    """
    if not history.states:
        raise StructuralError("Empty history")
    tracker = TaskTracker(task, history.dt)
    status = TaskStatus()
    for k, state in enumerate(history.states):
        status = tracker.update(k, state)
        if status.is_terminal:
            return status
    if history.horizon_reached:
        last = len(history.states) - 1
        return TaskStatus.failure(FailureCause.HORIZON, last, history.time(last))
    return status
