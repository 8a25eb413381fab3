#!/usr/bin/env python3
"""
Variant specs and reproducible task-variant generation

A ``VariantSpec`` describes how to vary a base task: drawn parameters,
perturbed start values, scaled budgets, channel overrides, extra dynamics
(e.g. friction) and extra goals. ``generate_variants`` draws ``count``
concrete tasks from it with a fixed seed.
"""
import logging
import math
from dataclasses import replace
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import DomainError, StructuralError, VariantError
from ..world import AgentBody, Channel, Interval, TransitionRule, World
from .problems import FAILURE, AtomicProblem, conjoin
from .task import Task

logger = logging.getLogger(__name__)

_MAX_REJECTIONS = 1000
_ARITY = {"fixed": 1, "uniform": 2, "gauss": 2}


class Distribution(BaseModel):
    """A fixed value, ``uniform(lo, hi)`` or ``gauss(mu, sigma)``"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["fixed", "uniform", "gauss"] = Field(
        default="fixed", description="Distribution family"
    )
    params: Tuple[float, ...] = Field(
        default=(0.0,), description="value | (low, high) | (mean, sigma)"
    )

    @model_validator(mode="before")
    @classmethod
    def _from_number(cls, data: Any) -> Any:
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return {"kind": "fixed", "params": (float(data),)}
        return data

    @model_validator(mode="after")
    def _check_params(self) -> "Distribution":
        if len(self.params) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} parameter(s)")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("distribution parameters must be finite")
        if self.kind == "uniform" and self.params[0] > self.params[1]:
            raise ValueError("uniform lower bound exceeds upper bound")
        if self.kind == "gauss" and self.params[1] < 0:
            raise ValueError("gauss sigma must be >= 0")
        return self

    @classmethod
    def fixed(cls, value: float) -> "Distribution":
        return cls(kind="fixed", params=(value,))

    @property
    def support(self) -> Tuple[float, float]:
        if self.kind == "fixed":
            return (self.params[0], self.params[0])
        if self.kind == "uniform":
            return (self.params[0], self.params[1])
        if self.params[1] == 0:
            return (self.params[0], self.params[0])
        return (-math.inf, math.inf)

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return self.params[0]
        if self.kind == "uniform":
            return float(rng.uniform(self.params[0], self.params[1]))
        return float(rng.normal(self.params[0], self.params[1]))


class StartPerturbation(BaseModel):
    """Change to one start value: ``=`` replace, ``+`` offset, ``*`` scale"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Literal["set", "offset", "scale"] = "set"
    value: Distribution


class ChannelPatch(BaseModel):
    """Replacement noise/resolution/latency for one sensor or actuator"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    noise_sigma: Optional[float] = Field(default=None, ge=0)
    resolution: Optional[float] = Field(default=None, ge=0)
    latency: Optional[int] = Field(default=None, ge=0)

    def apply(self, channel: Channel) -> Channel:
        return Channel(
            channel.variable,
            channel.noise_sigma if self.noise_sigma is None else self.noise_sigma,
            channel.resolution if self.resolution is None else self.resolution,
            channel.latency if self.latency is None else self.latency,
        )


class VariantSpec(BaseModel):
    """How to derive task variants from a base task

    ``after`` holds dynamics additions as taskdl rule text and may use the
    parameter names; ``goals`` holds taskdl ``goal``/``fail`` lines.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(description="Variant family name")
    base: str = Field(description="Name of the base task")
    count: int = Field(default=1, ge=1, description="Default number of variants")
    seed: int = Field(default=0, ge=0, description="Default generation seed")
    params: Dict[str, Distribution] = Field(default_factory=dict)
    start: Dict[str, StartPerturbation] = Field(default_factory=dict)
    deadline_scale: Optional[Distribution] = None
    energy_scale: Optional[Distribution] = None
    channels: Dict[str, ChannelPatch] = Field(default_factory=dict)
    after: List[str] = Field(default_factory=list)
    goals: List[str] = Field(default_factory=list)

    @field_validator("name", "base")
    @classmethod
    def _identifier(cls, value: str) -> str:
        if not value.isidentifier():
            raise ValueError(f"{value!r} is not a valid name")
        return value

    @field_validator("params", "start", "channels")
    @classmethod
    def _sorted(cls, value: Dict[str, Any]) -> Dict[str, Any]:
        return dict(sorted(value.items()))

    @field_validator("channels")
    @classmethod
    def _channel_keys(cls, value: Dict[str, ChannelPatch]) -> Dict[str, ChannelPatch]:
        for key in value:
            kind, _, variable = key.partition(":")
            if kind not in ("sensor", "actuator") or not variable:
                raise ValueError(
                    f"channel key {key!r} must look like 'sensor:<variable>'"
                )
        return value


def _draw_within(
    dist: Distribution,
    rng: np.random.Generator,
    transform: Callable[[float], float],
    allowed: Interval,
    variable: str,
) -> Tuple[float, float]:
    """Sample ``transform(draw)`` inside ``allowed``; returns (draw, value)

    Bounded distributions must map entirely into the allowed interval;
    gaussian draws are rejection-sampled.
    """
    low, high = dist.support
    if math.isfinite(low) and math.isfinite(high):
        ends = (transform(low), transform(high))
        if not (allowed.contains(min(ends)) and allowed.contains(max(ends))):
            raise VariantError(
                variable,
                f"Variant range for {variable!r} reaches {min(ends)}..{max(ends)}, "
                f"outside [{allowed.lower}, {allowed.upper}]",
            )
        draw = dist.sample(rng)
        return draw, transform(draw)
    for _ in range(_MAX_REJECTIONS):
        draw = dist.sample(rng)
        value = transform(draw)
        if allowed.contains(value):
            return draw, value
    raise VariantError(
        variable, f"Could not draw a value for {variable!r} inside its domain"
    )


def _perturb(mode: str, base: float) -> Callable[[float], float]:
    if mode == "offset":
        return lambda x: base + x
    if mode == "scale":
        return lambda x: base * x
    return lambda x: x


def generate_variants(
    task: Task,
    spec: VariantSpec,
    world: World,
    body: AgentBody,
    count: Optional[int] = None,
    seed: Optional[int] = None,
) -> List[Task]:
    """Draw concrete task variants

    Args:
        task: Base task
        spec: Variant spec; its ``count`` and ``seed`` are the defaults
        world: The document's world (before the task's own setup)
        body: The body the task is assigned to
        count: Number of variants to draw
        seed: Generation seed; variant ``i`` uses ``SeedSequence([seed, i])``

    Returns:
        Tasks named ``<base>__<variant>_<i>``, tagged with their drawn values

    Raises:
        VariantError: If the spec cannot yield a valid task; names the variable
    """
    # Parsing lives in taskdl, which imports this module
    from ..taskdl.parser import parse_goal, parse_rule

    count = spec.count if count is None else count
    seed = spec.seed if seed is None else seed
    if count < 1:
        raise VariantError("count", "Variant count must be at least 1")
    clash = sorted(set(spec.params) & set(world.names))
    if clash:
        raise VariantError(clash[0], f"Parameter {clash[0]!r} shadows a world variable")

    base_world, base_body = task.setup(world, body)
    rule_templates = [parse_rule(text, phase="after") for text in spec.after]
    extra_goals = [parse_goal(text) for text in spec.goals]

    variants = []
    for index in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        tags: Dict[str, Any] = {"variant": spec.name, "variant_index": float(index)}

        values = {name: dist.sample(rng) for name, dist in spec.params.items()}
        tags.update(values)

        start = dict(task.start)
        for name, perturbation in spec.start.items():
            if not base_world.has_variable(name):
                raise VariantError(name, f"Unknown start variable {name!r}")
            _, start[name] = _draw_within(
                perturbation.value,
                rng,
                _perturb(perturbation.mode, base_world.initial_state[name]),
                base_world.domain(name),
                name,
            )
            tags[f"start_{name}"] = start[name]

        deadline = task.deadline
        if spec.deadline_scale is not None:
            scale, deadline = _draw_within(
                spec.deadline_scale,
                rng,
                lambda x: task.deadline * x,
                Interval(0.0, math.inf, lower_closed=False),
                "deadline",
            )
            tags["deadline_scale"] = scale

        if spec.energy_scale is not None:
            name = task.energy.variable
            floor = task.energy.floor
            current = start.get(name, base_world.initial_state[name])
            scale, start[name] = _draw_within(
                spec.energy_scale,
                rng,
                lambda x: floor + (current - floor) * x,
                base_world.domain(name),
                name,
            )
            tags["energy_scale"] = scale

        channels = dict(task.channels)
        for key, patch in spec.channels.items():
            kind, _, variable = key.partition(":")
            try:
                current_channel = (
                    base_body.sensor(variable)
                    if kind == "sensor"
                    else base_body.actuator(variable)
                )
            except StructuralError as e:
                raise VariantError(variable, str(e)) from None
            channels[key] = patch.apply(current_channel)

        after = list(task.after)
        taken = {rule.target for rule in after}
        for template in rule_templates:
            if template.target in taken:
                raise VariantError(
                    template.target,
                    f"{template.target!r} already has a dynamics addition",
                )
            taken.add(template.target)
            after.append(
                TransitionRule(
                    template.target, template.expression.substitute(values)
                )
            )

        problem = task.problem
        if extra_goals:
            extra = AtomicProblem(
                goals=tuple(g for g in extra_goals if g.polarity != FAILURE),
                failures=tuple(g for g in extra_goals if g.polarity == FAILURE),
            )
            problem = conjoin(problem, extra)

        variant = replace(
            task,
            name=f"{task.name}__{spec.name}_{index}",
            problem=problem,
            deadline=deadline,
            start=start,
            channels=channels,
            after=tuple(after),
        ).with_tags(tags)
        try:
            variant.setup(world, body)
        except DomainError as e:
            raise VariantError(e.variable, str(e)) from None
        except StructuralError as e:
            raise VariantError(spec.name, str(e)) from None
        variants.append(variant)

    logger.debug("Generated %d variants of %s from %s", count, task.name, spec.name)
    return variants


def expand_variants(
    doc: Any, spec: VariantSpec, count: Optional[int] = None, seed: Optional[int] = None
) -> List[Task]:
    """``generate_variants`` for a spec stored in a TaskDocument"""
    task = doc.task(spec.base)
    return generate_variants(task, spec, doc.world, doc.body(task.body), count, seed)
