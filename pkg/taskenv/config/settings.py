#!/usr/bin/env python3
"""
Configuration management using Pydantic
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field


class ControllerConfig(BaseModel):
    """A named controller preset

    ``label`` is what ``--controller`` and batch specs refer to; ``name``
    is the registered controller it configures.
    """

    model_config = ConfigDict(extra="forbid")

    name: str
    label: Optional[str] = None
    enabled: bool = True
    config: Dict[str, Any] = Field(default_factory=dict)

    @property
    def key(self) -> str:
        return self.label or self.name


class Settings(BaseModel):
    """Main application settings"""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    verbose: bool = Field(default=False, description="Enable verbose logging")

    # Output settings
    output_format: Literal["text", "json"] = Field(
        default="text", description="Output format (text, json)"
    )

    # Analysis settings
    workers: int = Field(
        default=1, ge=1, description="Worker processes for batches and enumeration"
    )
    enumeration_cap: int = Field(
        default=10_000_000,
        ge=1,
        description="Largest sequence count enumerated exactly",
    )
    monte_carlo_samples: int = Field(
        default=10_000, ge=1, description="Samples when enumeration exceeds the cap"
    )
    determinism_runs: int = Field(
        default=10, ge=2, description="Runs per determinism estimate"
    )

    # Controller settings
    controllers: List[ControllerConfig] = Field(
        default_factory=list, description="Controller presets"
    )
    controller_directory: str = Field(
        default="controllers",
        description="Directory scanned for external controller plugins",
    )

    def preset(self, key: str) -> Optional[ControllerConfig]:
        """Enabled preset with the given label (or controller name)"""
        for preset in self.controllers:
            if preset.enabled and preset.key == key:
                return preset
        return None


class ConfigManager:
    """Manages application configuration with multiple sources"""

    DEFAULT_CONFIG_PATHS = [
        Path.home() / ".config" / "taskenv" / "config.yaml",
        Path.cwd() / "config.yaml",
        Path.cwd() / "taskenv.yaml",
    ]

    ENV_MAPPINGS = {
        "TASKENV_VERBOSE": "verbose",
        "TASKENV_OUTPUT_FORMAT": "output_format",
        "TASKENV_WORKERS": "workers",
        "TASKENV_ENUMERATION_CAP": "enumeration_cap",
        "TASKENV_MONTE_CARLO_SAMPLES": "monte_carlo_samples",
        "TASKENV_CONTROLLER_DIRECTORY": "controller_directory",
    }

    INT_KEYS = ("workers", "enumeration_cap", "monte_carlo_samples")

    def __init__(self, config_path: Optional[str] = None):
        """Initialize configuration manager

        Args:
            config_path: Optional path to configuration file
        """
        self.config_path = Path(config_path) if config_path else None
        self._settings: Optional[Settings] = None

    def load_config(self) -> Settings:
        """Load configuration from file and environment

        Returns:
            Settings: Loaded configuration

        Raises:
            ValidationError: If configuration validation fails
            ValueError: If the config file cannot be read
        """
        config_data: Dict[str, Any] = {}

        if config_file := self._find_config_file():
            config_data.update(self._load_config_file(config_file))

        # Environment overrides the file
        config_data.update(self._load_from_env())

        self._settings = Settings(**config_data)
        return self._settings

    def _find_config_file(self) -> Optional[Path]:
        """Find configuration file

        Returns:
            Path to configuration file or None if not found

        Raises:
            ValueError: An explicitly given file does not exist
        """
        if self.config_path:
            if not self.config_path.exists():
                raise ValueError(f"Config file not found: {self.config_path}")
            return self.config_path

        for path in self.DEFAULT_CONFIG_PATHS:
            if path.exists():
                return path

        return None

    def _load_config_file(self, config_path: Path) -> Dict[str, Any]:
        """Load configuration from file

        Args:
            config_path: Path to configuration file

        Returns:
            Configuration dictionary

        Raises:
            ValueError: If file format is not supported or the file is unreadable
        """
        suffix = config_path.suffix.lower()
        if suffix not in (".yaml", ".yml", ".json"):
            raise ValueError(f"Unsupported config file format: {config_path.suffix}")
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                if suffix == ".json":
                    data = json.load(f) or {}
                else:
                    data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError, json.JSONDecodeError) as e:
            raise ValueError(f"Failed to load config file {config_path}: {e}")
        if not isinstance(data, dict):
            raise ValueError(f"Config file {config_path} must hold a mapping")
        return data

    def _load_from_env(self) -> Dict[str, Any]:
        """Load configuration from environment variables

        Returns:
            Configuration dictionary from environment variables

        Raises:
            ValueError: A count variable does not hold an integer
        """
        env_config: Dict[str, Any] = {}

        for env_var, config_key in self.ENV_MAPPINGS.items():
            if env_value := os.getenv(env_var):
                if config_key == "verbose":
                    env_config[config_key] = env_value.lower() in ["true", "1", "yes"]
                elif config_key in self.INT_KEYS:
                    try:
                        env_config[config_key] = int(env_value)
                    except ValueError:
                        raise ValueError(
                            f"{env_var} must be an integer, got {env_value!r}"
                        ) from None
                else:
                    env_config[config_key] = env_value

        return env_config

    def save_config(
        self,
        settings: Settings,
        config_path: Optional[str] = None,
    ) -> None:
        """Save configuration to file

        A ``.json`` path is written as JSON, anything else as YAML.

        Args:
            settings: Settings to save
            config_path: Optional path to save configuration
        """
        save_path = Path(config_path) if config_path else self._get_default_save_path()

        save_path.parent.mkdir(parents=True, exist_ok=True)

        config_dict = settings.model_dump()
        with open(save_path, "w", encoding="utf-8") as f:
            if save_path.suffix.lower() == ".json":
                json.dump(config_dict, f, indent=2, sort_keys=True)
                f.write("\n")
            else:
                yaml.dump(config_dict, f, default_flow_style=False, allow_unicode=True)

    def _get_default_save_path(self) -> Path:
        return Path.home() / ".config" / "taskenv" / "config.yaml"

    @property
    def settings(self) -> Settings:
        """Get current settings, loading if necessary"""
        if self._settings is None:
            self._settings = self.load_config()
        return self._settings
