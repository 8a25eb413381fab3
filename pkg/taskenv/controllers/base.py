#!/usr/bin/env python3
"""
Base controller plugin system
"""
import importlib
import importlib.util
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type, Union

import numpy as np

from ..simulator import Briefing, Observation
from ..world import AgentBody, World


def parse_levels(value: Any) -> Tuple[float, ...]:
    """``"0,5,10"``, a single number or a list of numbers"""
    if isinstance(value, str):
        return tuple(float(part) for part in value.split(",") if part.strip())
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


class BaseController(ABC):
    """Base class for all controllers

    A controller is bound to a world and body before a run, reset with the
    run's controller stream, then asked for commands once per step.
    """

    name: str = "base"
    description: str = "Base controller"
    version: str = "1.0.0"

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """Initialize controller with configuration

        Args:
            config: Controller parameters
        """
        self.config = dict(config or {})
        self.logger = logging.getLogger(f"controller.{self.name}")
        self.world: Optional[World] = None
        self.body: Optional[AgentBody] = None
        self.rng: Optional[np.random.Generator] = None

    @property
    def identifier(self) -> str:
        """Canonical ``name[:key=value;...]`` form"""
        if not self.config:
            return self.name
        params = ";".join(f"{k}={_render(v)}" for k, v in sorted(self.config.items()))
        return f"{self.name}:{params}"

    def bind(self, world: World, body: AgentBody) -> None:
        """Attach to the world and body of the coming runs

        Raises:
            DomainError: A parameter lies outside an actuator's domain
        """
        self.world = world
        self.body = body

    def reset(self, rng: np.random.Generator) -> None:
        """Forget everything from the previous run"""
        self.rng = rng

    @abstractmethod
    def act(
        self, observation: Observation, elapsed: float, briefing: Briefing
    ) -> Mapping[str, float]:
        """Commands for this step

        Args:
            observation: Processed sensor values
            elapsed: Simulated time since the start of the run
            briefing: Task information for the task's communication mode

        Returns:
            Map from actuator variable to commanded value
        """
        pass

    def close(self) -> None:
        """Release external resources"""

    def validate_config(self) -> bool:
        """Validate controller configuration

        Returns:
            True if configuration is valid
        """
        return True

    def get_help(self) -> str:
        """Get help text for the controller

        Returns:
            Help text describing controller usage
        """
        return f"{self.name}: {self.description}"

    @property
    def actuators(self) -> Tuple[str, ...]:
        return self.body.actuator_names if self.body is not None else ()


def _render(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _coerce(text: str) -> Any:
    try:
        return float(text)
    except ValueError:
        return text.strip()


def parse_spec(spec: str) -> Tuple[str, Dict[str, Any]]:
    """Split ``name``, ``name:value`` or ``name:key=v;key=v`` into name and config"""
    name, _, rest = spec.partition(":")
    name = name.strip()
    if not name:
        raise ValueError(f"Empty controller name in {spec!r}")
    config: Dict[str, Any] = {}
    if not rest:
        return name, config
    if "=" not in rest:
        return name, {"value": _coerce(rest)}
    for part in rest.split(";"):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"Malformed controller parameter {part!r} in {spec!r}")
        config[key.strip()] = _coerce(value)
    return name, config


class ControllerManager:
    """Registry of controller classes, built-in and external"""

    def __init__(self, controller_directory: str = "controllers"):
        """Initialize controller manager

        Args:
            controller_directory: Directory containing external controllers
        """
        self.controller_directory = Path(controller_directory)
        self.controllers: Dict[str, Type[BaseController]] = {}
        self.logger = logging.getLogger("controller_manager")

        self._load_builtin_controllers()

    def _load_builtin_controllers(self) -> None:
        """Load built-in controllers"""
        from .builtin import (
            BangBangController,
            ConstantController,
            RandomGridController,
            ScriptedController,
        )
        from .external import ExternalController

        for cls in (
            RandomGridController,
            ConstantController,
            BangBangController,
            ScriptedController,
            ExternalController,
        ):
            self.register_controller(cls)

    def register_controller(self, cls: Type[BaseController]) -> None:
        """Register a controller class

        Args:
            cls: Controller class to register
        """
        if not (isinstance(cls, type) and issubclass(cls, BaseController)):
            raise ValueError("Controller must inherit from BaseController")

        self.controllers[cls.name] = cls
        self.logger.info(f"Registered controller: {cls.name}")

    def load_external_controllers(self) -> None:
        """Load controllers from external directory"""
        if not self.controller_directory.exists():
            self.logger.info(
                f"Controller directory {self.controller_directory} does not exist"
            )
            return

        for controller_file in sorted(self.controller_directory.glob("*.py")):
            if controller_file.name.startswith("_"):
                continue

            try:
                self._load_controller_from_file(controller_file)
            except Exception as e:
                self.logger.error(
                    f"Failed to load controller from {controller_file}: {e}"
                )

    def _load_controller_from_file(self, controller_file: Path) -> None:
        """Load controller classes from a Python file

        Args:
            controller_file: Path to controller file
        """
        module_name = f"external_controller_{controller_file.stem}"
        spec = importlib.util.spec_from_file_location(module_name, controller_file)

        if spec is None or spec.loader is None:
            raise ImportError(f"Cannot load controller from {controller_file}")

        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)

        for attr_name in dir(module):
            attr = getattr(module, attr_name)
            if (
                isinstance(attr, type)
                and issubclass(attr, BaseController)
                and attr is not BaseController
                and attr.__module__ == module_name
            ):
                self.register_controller(attr)

    def list_controllers(self) -> List[str]:
        """Get list of available controller names"""
        return list(self.controllers.keys())

    def create(self, spec: Union[str, Any]) -> BaseController:
        """Instantiate a controller

        Args:
            spec: ``name:value`` / ``name:key=v;key=v`` string, or a
                ControllerConfig-like object with ``name`` and ``config``

        Returns:
            Configured controller

        Raises:
            ValueError: Unknown controller or invalid configuration
        """
        if isinstance(spec, str):
            name, config = parse_spec(spec)
        else:
            name, config = spec.name, dict(spec.config)
        cls = self.controllers.get(name)
        if cls is None:
            raise ValueError(
                f"Controller '{name}' not found; "
                f"available: {', '.join(self.controllers)}"
            )
        controller = cls(config)
        if not controller.validate_config():
            raise ValueError(f"Controller {name} has invalid configuration")
        return controller

    def get_controller_help(self, name: Optional[str] = None) -> str:
        """Get help for controllers

        Args:
            name: Optional controller name for specific help

        Returns:
            Help text
        """
        if name:
            cls = self.controllers.get(name)
            if cls:
                return cls().get_help()
            return f"Controller '{name}' not found"
        help_text = "Available controllers:\n"
        for controller_name, cls in self.controllers.items():
            help_text += f"  {controller_name}: {cls.description}\n"
        return help_text
