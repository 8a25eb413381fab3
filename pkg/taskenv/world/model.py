#!/usr/bin/env python3
"""
Core world-model types

A world is the tuple of variables, dynamics, initial state, domains and
invariant relations. Expression trees come from ``taskenv.taskdl``; this
module only relies on their ``variables()``, ``evaluate()`` and ``str()``.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    TYPE_CHECKING,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Tuple,
)

from ..errors import DomainError, StructuralError
from .intervals import Interval

if TYPE_CHECKING:
    from ..taskdl.expressions import Expr

State = Dict[str, float]

RESERVED_NAMES = frozenset(
    {
        "delta", "inf", "and", "or", "not", "in", "hold", "window", "if",
        "sqrt", "abs", "exp", "log", "sin", "cos", "min", "max", "gauss", "uniform",
    }
)


@dataclass(frozen=True)
class Variable:
    """A named real-valued quantity of the world"""

    name: str
    domain: Interval = field(default_factory=Interval.unbounded)
    unit: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.name.isidentifier() or self.name in RESERVED_NAMES:
            raise StructuralError(f"Invalid variable name: {self.name!r}")


@dataclass(frozen=True)
class TransitionRule:
    """``target <- expression``, evaluated once per step"""

    target: str
    expression: "Expr"

    def variables(self) -> FrozenSet[str]:
        """Variables the rule reads or writes"""
        return frozenset(self.expression.variables()) | {self.target}

    def __str__(self) -> str:
        return f"{self.target} <- {self.expression}"


@dataclass(frozen=True)
class InvariantRelation:
    """Boolean expression expected to hold in every state"""

    expression: "Expr"

    def variables(self) -> FrozenSet[str]:
        return frozenset(self.expression.variables())

    def holds(self, state: Mapping[str, float]) -> bool:
        return bool(self.expression.evaluate(state, 0.0, None))

    def __str__(self) -> str:
        return str(self.expression)


def _check_rules(
    rules: Iterable[TransitionRule], names: FrozenSet[str], phase: str
) -> None:
    seen = set()
    for rule in rules:
        if rule.target not in names:
            raise StructuralError(
                f"{phase} rule targets unknown variable {rule.target!r}"
            )
        if rule.target in seen:
            raise StructuralError(f"Duplicate {phase} rule for {rule.target!r}")
        seen.add(rule.target)
        unknown = sorted(rule.variables() - names)
        if unknown:
            raise StructuralError(
                f"{phase} rule for {rule.target!r} references unknown variable "
                f"{unknown[0]!r}"
            )


@dataclass(frozen=True)
class World:
    """Interactive system W = <V, F, S0, D, R>

    ``dynamics`` are evaluated synchronously against the pre-step state;
    ``after`` holds dynamics additions (e.g. friction) evaluated in a second
    synchronous phase against the result of the first.
    """

    name: str
    variables: Tuple[Variable, ...]
    dynamics: Tuple[TransitionRule, ...]
    initial_state: State
    relations: Tuple[InvariantRelation, ...] = ()
    after: Tuple[TransitionRule, ...] = ()

    def __post_init__(self) -> None:
        # Canonical ordering keeps equality independent of declaration order
        object.__setattr__(
            self, "variables", tuple(sorted(self.variables, key=lambda v: v.name))
        )
        object.__setattr__(
            self, "dynamics", tuple(sorted(self.dynamics, key=lambda r: r.target))
        )
        object.__setattr__(
            self, "after", tuple(sorted(self.after, key=lambda r: r.target))
        )
        object.__setattr__(self, "relations", tuple(sorted(self.relations, key=str)))
        object.__setattr__(
            self,
            "initial_state",
            {k: float(v) for k, v in sorted(self.initial_state.items())},
        )

        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise StructuralError(f"Duplicate variable {dupes[0]!r}")
        name_set = frozenset(names)
        _check_rules(self.dynamics, name_set, "Transition")
        _check_rules(self.after, name_set, "After")
        for relation in self.relations:
            unknown = sorted(relation.variables() - name_set)
            if unknown:
                raise StructuralError(
                    f"Relation {relation} references unknown variable {unknown[0]!r}"
                )

        assigned = set(self.initial_state)
        if assigned != name_set:
            missing = sorted(name_set - assigned)
            extra = sorted(assigned - name_set)
            if missing:
                raise StructuralError(f"Initial state does not assign {missing[0]!r}")
            raise StructuralError(
                f"Initial state assigns unknown variable {extra[0]!r}"
            )
        for variable in self.variables:
            value = self.initial_state[variable.name]
            if not variable.domain.contains(value):
                raise DomainError(
                    variable.name,
                    f"Initial value {value} of {variable.name!r} is outside its domain",
                )
        for relation in self.relations:
            if not relation.holds(self.initial_state):
                raise StructuralError(f"Initial state violates relation {relation}")

    @cached_property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def _by_name(self) -> Dict[str, Variable]:
        return {v.name: v for v in self.variables}

    def variable(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise StructuralError(f"Unknown variable {name!r}") from None

    def has_variable(self, name: str) -> bool:
        return name in self._by_name

    def domain(self, name: str) -> Interval:
        return self.variable(name).domain

    def rule_for(self, target: str) -> Optional[TransitionRule]:
        for rule in self.dynamics:
            if rule.target == target:
                return rule
        return None

    def with_initial(self, values: Mapping[str, float]) -> "World":
        """Copy of the world with some initial values replaced"""
        for name in values:
            self.variable(name)
        merged = dict(self.initial_state)
        merged.update(values)
        return World(
            self.name,
            self.variables,
            self.dynamics,
            merged,
            self.relations,
            self.after,
        )

    def with_after(self, rules: Iterable[TransitionRule]) -> "World":
        """Copy of the world with extra dynamics additions appended"""
        return World(
            self.name,
            self.variables,
            self.dynamics,
            self.initial_state,
            self.relations,
            tuple(self.after) + tuple(rules),
        )


def violations(world: World, state: Mapping[str, float]) -> List[str]:
    """Describe every relation or domain violated by a state

    Returns:
        ``domain:<var>`` entries followed by the text of each violated relation
    """
    found = [
        f"domain:{v.name}"
        for v in world.variables
        if not v.domain.contains(state[v.name])
    ]
    found.extend(str(r) for r in world.relations if not r.holds(state))
    return found


def validate_state(world: World, state: Mapping[str, float]) -> bool:
    """Check that a full state is valid in a world

    Args:
        world: World the state belongs to
        state: Full value assignment

    Returns:
        True iff every value lies in its domain and every relation holds

    Raises:
        StructuralError: If the state names an unknown variable or misses one
    """
    for name in state:
        if not world.has_variable(name):
            raise StructuralError(f"State assigns unknown variable {name!r}")
    for name in world.names:
        if name not in state:
            raise StructuralError(f"State does not assign {name!r}")
    return not violations(world, state)


@dataclass(frozen=True)
class PartialState:
    """Interval bounds on a subset of the variables

    A partial state covers every concrete state whose bounded values lie in
    their intervals.
    """

    bounds: Dict[str, Interval] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bounds", dict(sorted(self.bounds.items())))
        for name, interval in self.bounds.items():
            if not interval.is_proper():
                raise StructuralError(
                    f"Bound on {name!r} is empty or degenerate: "
                    "lower must be below upper"
                )

    def variables(self) -> FrozenSet[str]:
        return frozenset(self.bounds)

    def is_empty(self) -> bool:
        return not self.bounds

    def covers(self, state: Mapping[str, float]) -> bool:
        return covers(self, state)

    def check_against(self, world: World) -> None:
        """Raise if a bound names an unknown variable or leaves its domain"""
        for name, interval in self.bounds.items():
            domain = world.domain(name)
            if interval.intersect(domain) is None:
                raise DomainError(name, f"Bound on {name!r} lies outside its domain")

    def restrict(self, world: World) -> "PartialState":
        """Clip every bound to the variable's domain"""
        clipped = {}
        for name, interval in self.bounds.items():
            inside = interval.intersect(world.domain(name))
            if inside is None:
                raise DomainError(name, f"Bound on {name!r} lies outside its domain")
            clipped[name] = inside
        return PartialState(clipped)

    def intersect(self, other: "PartialState") -> Optional["PartialState"]:
        merged = dict(self.bounds)
        for name, interval in other.bounds.items():
            if name in merged:
                both = merged[name].intersect(interval)
                if both is None:
                    return None
                merged[name] = both
            else:
                merged[name] = interval
        return PartialState(merged)

    def without(self, names: Iterable[str]) -> "PartialState":
        drop = set(names)
        return PartialState({k: v for k, v in self.bounds.items() if k not in drop})


def covers(partial: PartialState, state: Mapping[str, float]) -> bool:
    """True iff every bounded variable's value lies within its interval

    Raises:
        StructuralError: If the partial state bounds a variable absent from state
    """
    for name, interval in partial.bounds.items():
        try:
            value = state[name]
        except KeyError:
            raise StructuralError(
                f"Partial state bounds {name!r}, which the state does not assign"
            ) from None
        if not interval.contains(value):
            return False
    return True


@dataclass(frozen=True)
class Channel:
    """Sensor or actuator channel over one world variable"""

    variable: str
    noise_sigma: float = 0.0
    resolution: float = 0.0
    latency: int = 0

    def __post_init__(self) -> None:
        if self.noise_sigma < 0 or self.resolution < 0:
            raise StructuralError(
                f"Channel {self.variable!r}: noise and resolution must be >= 0"
            )
        if self.latency < 0 or int(self.latency) != self.latency:
            raise StructuralError(
                f"Channel {self.variable!r}: latency must be a whole number of steps"
            )
        object.__setattr__(self, "latency", int(self.latency))

    @property
    def is_noisy(self) -> bool:
        return self.noise_sigma > 0


@dataclass(frozen=True)
class AgentBody:
    """The agent's interface to the world: what it reads and what it writes"""

    name: str
    sensors: Tuple[Channel, ...] = ()
    actuators: Tuple[Channel, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sensors", tuple(sorted(self.sensors, key=lambda c: c.variable))
        )
        object.__setattr__(
            self, "actuators", tuple(sorted(self.actuators, key=lambda c: c.variable))
        )
        for kind, channels in (("sensor", self.sensors), ("actuator", self.actuators)):
            names = [c.variable for c in channels]
            if len(set(names)) != len(names):
                raise StructuralError(f"Body {self.name!r} repeats a {kind} channel")

    @property
    def sensor_names(self) -> Tuple[str, ...]:
        return tuple(c.variable for c in self.sensors)

    @property
    def actuator_names(self) -> Tuple[str, ...]:
        return tuple(c.variable for c in self.actuators)

    def sensor(self, variable: str) -> Channel:
        for channel in self.sensors:
            if channel.variable == variable:
                return channel
        raise StructuralError(f"Body {self.name!r} has no sensor on {variable!r}")

    def actuator(self, variable: str) -> Channel:
        for channel in self.actuators:
            if channel.variable == variable:
                return channel
        raise StructuralError(f"Body {self.name!r} has no actuator on {variable!r}")

    def check_against(self, world: World) -> None:
        """Sensors and actuators must be variables of the world; actuated
        variables need a bounded domain."""
        for channel in self.sensors + self.actuators:
            world.variable(channel.variable)
        for channel in self.actuators:
            if not world.domain(channel.variable).is_bounded:
                raise DomainError(
                    channel.variable,
                    f"Actuated variable {channel.variable!r} needs a bounded domain",
                )

    def with_overrides(self, overrides: Mapping[str, Channel]) -> "AgentBody":
        """Replace channels by variable name (sensor or actuator, whichever exists)"""
        sensors = {c.variable: c for c in self.sensors}
        actuators = {c.variable: c for c in self.actuators}
        for key, channel in overrides.items():
            kind, _, variable = key.partition(":")
            target = sensors if kind == "sensor" else actuators
            if variable not in target:
                raise StructuralError(
                    f"Body {self.name!r} has no {kind} on {variable!r}"
                )
            target[variable] = channel
        return AgentBody(self.name, tuple(sensors.values()), tuple(actuators.values()))
