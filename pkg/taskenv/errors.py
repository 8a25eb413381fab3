#!/usr/bin/env python3
"""
Exception hierarchy shared by all taskenv modules
"""
from dataclasses import dataclass
from typing import List, Optional


class TaskEnvError(Exception):
    """Base class for every error raised by taskenv"""


class StructuralError(TaskEnvError, ValueError):
    """A reference or shape problem: unknown variable, mismatched worlds, ..."""


class DomainError(StructuralError):
    """A value or restriction lies outside a variable's domain"""

    def __init__(self, variable: str, message: str):
        super().__init__(message)
        self.variable = variable


class EvaluationError(TaskEnvError, ArithmeticError):
    """Expression evaluation failed (division by zero, sqrt of a negative, ...)"""


class CompositionError(TaskEnvError, ValueError):
    """Problems or tasks cannot be combined as requested"""


class VariantError(TaskEnvError, ValueError):
    """A variant spec cannot produce valid tasks"""

    def __init__(self, variable: str, message: str):
        super().__init__(message)
        self.variable = variable


class EnumerationCapExceeded(TaskEnvError):
    """The action-sequence space is larger than the configured cap"""

    def __init__(self, size: int, cap: int):
        super().__init__(
            f"Enumeration would simulate {size} action sequences (cap {cap}); "
            "use a coarser grid, a longer decision period, or decompose the "
            "task serially"
        )
        self.size = size
        self.cap = cap


class RunAborted(TaskEnvError):
    """A run was stopped because the controller broke its contract"""


@dataclass(frozen=True)
class Diagnostic:
    """A source-located message produced while reading a taskdl document"""

    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class TaskDLError(TaskEnvError, ValueError):
    """A taskdl document failed to parse or validate"""

    def __init__(self, diagnostics: List[Diagnostic], source: Optional[str] = None):
        self.diagnostics = list(diagnostics)
        self.source = source
        prefix = f"{source}:" if source else ""
        super().__init__("\n".join(f"{prefix}{d}" for d in self.diagnostics))
