"""Controller plugins: the agent side of a run"""

from .base import BaseController, ControllerManager, parse_spec
from .builtin import (
    BangBangController,
    ConstantController,
    RandomGridController,
    ScriptedController,
)
from .external import ExternalController


def builtin_controllers() -> dict:
    """Names and classes of the controllers that ship with taskenv"""
    return {
        cls.name: cls
        for cls in (
            RandomGridController,
            ConstantController,
            BangBangController,
            ScriptedController,
        )
    }


__all__ = [
    "BaseController",
    "ControllerManager",
    "parse_spec",
    "builtin_controllers",
    "ConstantController",
    "RandomGridController",
    "BangBangController",
    "ScriptedController",
    "ExternalController",
]
