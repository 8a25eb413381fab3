"""Batch evaluation of controllers on tasks"""

from .batch import (
    BatchResult,
    BatchSpec,
    CellSummary,
    ResultRecord,
    read_results,
    run_batch,
    summarize,
)

__all__ = [
    "BatchSpec",
    "ResultRecord",
    "CellSummary",
    "BatchResult",
    "run_batch",
    "read_results",
    "summarize",
]
