"""World model: variables, states, environments and agent bodies"""

from .environment import Environment, environment_overlap, slice_environment
from .intervals import INF, Interval
from .model import (
    AgentBody,
    Channel,
    InvariantRelation,
    PartialState,
    State,
    TransitionRule,
    Variable,
    World,
    covers,
    validate_state,
    violations,
)

__all__ = [
    "INF",
    "Interval",
    "Variable",
    "TransitionRule",
    "InvariantRelation",
    "World",
    "State",
    "PartialState",
    "Channel",
    "AgentBody",
    "Environment",
    "validate_state",
    "violations",
    "covers",
    "slice_environment",
    "environment_overlap",
]
