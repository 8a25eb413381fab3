#!/usr/bin/env python3
"""
Environments: slices of a world relevant to a task or an agent
"""
from dataclasses import dataclass, field
from typing import AbstractSet, Dict, Mapping, Optional, Tuple

from ..errors import DomainError, StructuralError
from .intervals import Interval
from .model import InvariantRelation, TransitionRule, Variable, World


@dataclass(frozen=True)
class Environment:
    """A subspace of a parent world

    Only dynamics and relations that reference subset variables exclusively
    are inherited.
    """

    parent: World
    variable_subset: Tuple[str, ...]
    restricted_domains: Dict[str, Interval] = field(default_factory=dict)
    dynamics: Tuple[TransitionRule, ...] = ()
    relations: Tuple[InvariantRelation, ...] = ()
    after: Tuple[TransitionRule, ...] = ()

    def domain(self, name: str) -> Interval:
        if name not in self.variable_subset:
            raise StructuralError(f"Variable {name!r} is not part of this environment")
        return self.restricted_domains.get(name, self.parent.domain(name))

    def as_world(self, name: Optional[str] = None) -> World:
        """Materialise the slice as a world of its own

        Raises:
            DomainError: If a parent initial value leaves a restricted domain
        """
        variables = tuple(
            Variable(v.name, self.domain(v.name), v.unit)
            for v in self.parent.variables
            if v.name in self.variable_subset
        )
        initial = {n: self.parent.initial_state[n] for n in self.variable_subset}
        return World(
            name or self.parent.name,
            variables,
            self.dynamics,
            initial,
            self.relations,
            self.after,
        )


def slice_environment(
    world: World,
    subset: AbstractSet[str],
    restrictions: Optional[Mapping[str, Interval]] = None,
) -> Environment:
    """Cut an environment out of a world

    Args:
        world: Parent world
        subset: Variables to keep (non-empty)
        restrictions: Optional narrower domains, each within the parent domain

    Returns:
        Environment inheriting exactly the rules and relations whose
        referenced variables all lie in ``subset``

    Raises:
        StructuralError: Empty subset or unknown variable
        DomainError: A restriction leaves the parent domain
    """
    if not subset:
        raise StructuralError("An environment needs at least one variable")
    for name in subset:
        world.variable(name)
    restrictions = dict(restrictions or {})
    for name, interval in restrictions.items():
        if name not in subset:
            raise StructuralError(
                f"Restriction on {name!r}, which is not in the subset"
            )
        if not interval.is_subset(world.domain(name)):
            raise DomainError(name, f"Restriction on {name!r} leaves the parent domain")

    keep = frozenset(subset)
    return Environment(
        parent=world,
        variable_subset=tuple(sorted(keep)),
        restricted_domains=dict(sorted(restrictions.items())),
        dynamics=tuple(r for r in world.dynamics if r.variables() <= keep),
        relations=tuple(r for r in world.relations if r.variables() <= keep),
        after=tuple(r for r in world.after if r.variables() <= keep),
    )


def environment_overlap(a: Environment, b: Environment) -> float:
    """Jaccard overlap of two environments' variable sets

    Raises:
        StructuralError: If the environments slice different worlds
    """
    if a.parent != b.parent:
        raise StructuralError("Environments belong to different worlds")
    left, right = set(a.variable_subset), set(b.variable_subset)
    return len(left & right) / len(left | right)
