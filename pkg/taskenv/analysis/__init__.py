"""Enumeration, resource-optimal search, profiling and task distances"""

from .distance import (
    UNIT_RANGES,
    DistanceConfig,
    dimension_deltas,
    distance,
    distance_matrix,
    write_distance_csv,
)
from .enumeration import (
    DEFAULT_CAP,
    EnumerationResult,
    GridSolution,
    enumerate_task,
    min_energy,
    min_time,
    monte_carlo,
)
from .grid import Action, ActionGrid
from .profile import DIMENSIONS, TaskProfile, measure_determinism, profile

__all__ = [
    "Action",
    "ActionGrid",
    "DEFAULT_CAP",
    "EnumerationResult",
    "GridSolution",
    "enumerate_task",
    "min_time",
    "min_energy",
    "monte_carlo",
    "DIMENSIONS",
    "TaskProfile",
    "profile",
    "measure_determinism",
    "UNIT_RANGES",
    "DistanceConfig",
    "distance",
    "distance_matrix",
    "dimension_deltas",
    "write_distance_csv",
]
