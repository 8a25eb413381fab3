#!/usr/bin/env python3
"""
Real intervals used for variable domains and partial-state bounds
"""
import math
from dataclasses import dataclass
from typing import Optional

INF = math.inf


@dataclass(frozen=True)
class Interval:
    """Interval of the extended real line

    Domains are closed (an infinite end is treated as closed); goal bounds
    keep the strictness they were authored with, so ``position > 10`` is
    ``Interval(10, inf, lower_closed=False)``.
    """

    lower: float = -INF
    upper: float = INF
    lower_closed: bool = True
    upper_closed: bool = True

    def __post_init__(self) -> None:
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("Interval bounds must not be NaN")
        if self.lower > self.upper:
            raise ValueError(f"Interval lower bound {self.lower} exceeds {self.upper}")
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        # An infinite end is never attained, so its flag carries no meaning
        if math.isinf(self.lower):
            object.__setattr__(self, "lower_closed", True)
        if math.isinf(self.upper):
            object.__setattr__(self, "upper_closed", True)

    @classmethod
    def unbounded(cls) -> "Interval":
        return cls(-INF, INF)

    @classmethod
    def closed(cls, lower: float, upper: float) -> "Interval":
        return cls(lower, upper, True, True)

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    @property
    def is_unbounded(self) -> bool:
        return self.lower == -INF and self.upper == INF

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def center(self) -> float:
        return (self.lower + self.upper) / 2.0

    def contains(self, value: float) -> bool:
        if value < self.lower or value > self.upper:
            return False
        if value == self.lower and not self.lower_closed and math.isfinite(value):
            return False
        if value == self.upper and not self.upper_closed and math.isfinite(value):
            return False
        return True

    def is_proper(self) -> bool:
        """True when the interval has a non-empty interior (lower < upper)"""
        return self.lower < self.upper

    def is_subset(self, other: "Interval") -> bool:
        if self.lower < other.lower or self.upper > other.upper:
            return False
        if self.lower == other.lower and self.lower_closed and not other.lower_closed:
            return math.isinf(self.lower)
        if self.upper == other.upper and self.upper_closed and not other.upper_closed:
            return math.isinf(self.upper)
        return True

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        """Intersection, or None when it is empty or degenerate"""
        if self.lower > other.lower:
            lower, lower_closed = self.lower, self.lower_closed
        elif self.lower < other.lower:
            lower, lower_closed = other.lower, other.lower_closed
        else:
            lower, lower_closed = self.lower, self.lower_closed and other.lower_closed
        if self.upper < other.upper:
            upper, upper_closed = self.upper, self.upper_closed
        elif self.upper > other.upper:
            upper, upper_closed = other.upper, other.upper_closed
        else:
            upper, upper_closed = self.upper, self.upper_closed and other.upper_closed
        if lower >= upper:
            return None
        return Interval(lower, upper, lower_closed, upper_closed)

    def clip(self, value: float) -> float:
        return min(max(value, self.lower), self.upper)
