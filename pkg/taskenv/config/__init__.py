"""Configuration management module"""

from .settings import ConfigManager, ControllerConfig, Settings

__all__ = ["Settings", "ConfigManager", "ControllerConfig"]
