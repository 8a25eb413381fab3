#!/usr/bin/env python3
"""
Weighted distances between task profiles
"""
import csv
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import StructuralError
from .profile import TaskProfile

Range = Tuple[float, float]

# Measures that are fractions by construction
UNIT_RANGES: Dict[str, Range] = {
    name: (0.0, 1.0)
    for name in (
        "success_ratio",
        "ratio_half_time",
        "ratio_half_energy",
        "observability",
        "controllability",
        "dynamism",
        "stochasticity",
        "continuity",
        "determinism",
    )
}


class DistanceConfig(BaseModel):
    """Per-dimension weights and optional normalization ranges

    With no weights every dimension the profiles share counts once. The
    fraction-valued profile dimensions default to the range [0, 1]; any
    other dimension without a configured range is normalized by the spread
    of the compared profiles. A distance over fixed ranges only is a
    metric; spread-normalized dimensions depend on which profiles are
    compared, so only ``distance_matrix`` keeps them consistent.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    weights: Dict[str, float] = Field(default_factory=dict)
    ranges: Dict[str, Range] = Field(default_factory=dict)

    @field_validator("weights")
    @classmethod
    def _check_weights(cls, value: Dict[str, float]) -> Dict[str, float]:
        if any(w < 0 or not math.isfinite(w) for w in value.values()):
            raise ValueError("weights must be finite and >= 0")
        if value and not any(w > 0 for w in value.values()):
            raise ValueError("at least one weight must be positive")
        return dict(sorted(value.items()))

    @field_validator("ranges")
    @classmethod
    def _check_ranges(cls, value: Dict[str, Range]) -> Dict[str, Range]:
        for name, (low, high) in value.items():
            if not low < high:
                raise ValueError(f"range of {name!r} must have low < high")
        return value

    def active(self, profiles: Sequence[TaskProfile]) -> Dict[str, float]:
        """Dimensions that take part, with their weights

        Raises:
            StructuralError: A weighted dimension is missing from a profile,
                or (without weights) the profiles measure different dimensions
        """
        if self.weights:
            active = {d: w for d, w in self.weights.items() if w > 0}
            for p in profiles:
                missing = sorted(set(active) - set(p.measures))
                if missing:
                    raise StructuralError(
                        f"Profile {p.task!r} lacks dimension {missing[0]!r}"
                    )
            return active
        dims = set(profiles[0].measures)
        for p in profiles[1:]:
            if set(p.measures) != dims:
                odd = sorted(dims.symmetric_difference(p.measures))
                raise StructuralError(f"Profiles differ in dimension {odd[0]!r}")
        return {d: 1.0 for d in sorted(dims)}


def _spans(
    profiles: Sequence[TaskProfile], dims: Sequence[str], cfg: DistanceConfig
) -> Dict[str, float]:
    spans = {}
    for d in dims:
        if d in cfg.ranges:
            low, high = cfg.ranges[d]
        elif d in UNIT_RANGES:
            low, high = UNIT_RANGES[d]
        else:
            values = [p.measures[d] for p in profiles]
            low, high = min(values), max(values)
        spans[d] = high - low
    return spans


def _weighted(
    a: TaskProfile, b: TaskProfile, weights: Dict[str, float], spans: Dict[str, float]
) -> float:
    total = 0.0
    for d, w in weights.items():
        if spans[d] == 0:
            continue
        total += w * ((a.measures[d] - b.measures[d]) / spans[d]) ** 2
    return math.sqrt(total)


def distance(
    a: TaskProfile, b: TaskProfile, cfg: Optional[DistanceConfig] = None
) -> float:
    """Weighted Euclidean distance over normalized dimensions

    Zero exactly when the profiles agree on every weighted dimension.

    Raises:
        StructuralError: The profiles do not share the weighted dimensions
    """
    cfg = cfg or DistanceConfig()
    weights = cfg.active([a, b])
    return _weighted(a, b, weights, _spans([a, b], list(weights), cfg))


def distance_matrix(
    profiles: Sequence[TaskProfile], cfg: Optional[DistanceConfig] = None
) -> np.ndarray:
    """Pairwise distances with one normalization shared by the whole set"""
    cfg = cfg or DistanceConfig()
    if not profiles:
        return np.zeros((0, 0))
    weights = cfg.active(profiles)
    spans = _spans(profiles, list(weights), cfg)
    n = len(profiles)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = _weighted(profiles[i], profiles[j], weights, spans)
            matrix[i, j] = matrix[j, i] = value
    return matrix


def dimension_deltas(a: TaskProfile, b: TaskProfile) -> Dict[str, float]:
    """``b - a`` for every dimension both profiles measure"""
    return {d: b.measures[d] - a.measures[d] for d in a.dimensions if d in b.measures}


def write_distance_csv(
    path: Union[str, Path], profiles: Sequence[TaskProfile], matrix: np.ndarray
) -> None:
    names: List[str] = [p.task for p in profiles]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["task", *names])
        for name, row in zip(names, matrix):
            writer.writerow([name, *(repr(float(x)) for x in row)])
