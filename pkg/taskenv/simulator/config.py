#!/usr/bin/env python3
"""
Simulation run configuration
"""
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..tasks.task import Task


class SimConfig(BaseModel):
    """Settings of one simulation run"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    delta: float = Field(default=0.01, gt=0, description="Step size in seconds")
    horizon: Optional[float] = Field(
        default=None, gt=0, description="Max simulated time (default: deadline + 1 s)"
    )
    master_seed: int = Field(default=0, ge=0, description="Seed of every random stream")
    clamp_actuators: bool = Field(
        default=False, description="Clip out-of-domain commands instead of failing"
    )

    @model_validator(mode="after")
    def _check_horizon(self) -> "SimConfig":
        if self.horizon is not None and self.delta > self.horizon:
            raise ValueError("delta must not exceed the horizon")
        return self

    def horizon_for(self, task: Task) -> float:
        if self.horizon is not None:
            return self.horizon
        return task.deadline + 1.0

    @classmethod
    def from_document(cls, doc: Any, **overrides: Any) -> "SimConfig":
        """Config seeded from a document's ``sim`` line; None overrides are ignored"""
        values = {"delta": doc.sim.delta, "master_seed": doc.sim.seed}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
