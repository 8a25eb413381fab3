#!/usr/bin/env python3
"""
Tests for configuration management
"""
import json
import tempfile
from pathlib import Path

import pytest
import yaml
from pydantic import ValidationError

from taskenv.config import ConfigManager, ControllerConfig, Settings


class TestSettings:
    """Test cases for Settings model"""

    def test_default_settings(self):
        """Test default settings creation"""
        settings = Settings()

        assert settings.verbose is False
        assert settings.output_format == "text"
        assert settings.workers == 1
        assert settings.enumeration_cap == 10_000_000
        assert settings.monte_carlo_samples == 10_000
        assert settings.determinism_runs == 10
        assert settings.controllers == []
        assert settings.controller_directory == "controllers"

    def test_settings_with_controllers(self):
        """Test settings with controller presets"""
        preset = ControllerConfig(
            name="constant", label="frugal", config={"power": 0.15}
        )
        settings = Settings(controllers=[preset])

        assert len(settings.controllers) == 1
        assert settings.controllers[0].name == "constant"
        assert settings.controllers[0].config == {"power": 0.15}

    def test_settings_validation(self):
        """Test settings validation"""
        settings = Settings(output_format="json")
        assert settings.output_format == "json"

        with pytest.raises(ValidationError):
            Settings(output_format="xml")
        with pytest.raises(ValidationError):
            Settings(workers=0)
        with pytest.raises(ValidationError):
            Settings(determinism_runs=1)
        with pytest.raises(ValidationError):
            Settings(unknown_option=True)

    def test_assignment_is_validated(self):
        """Test that assigning an invalid value is rejected"""
        settings = Settings()
        with pytest.raises(ValidationError):
            settings.workers = -2

    def test_preset_lookup(self):
        """Test finding presets by label, skipping disabled ones"""
        settings = Settings(
            controllers=[
                ControllerConfig(
                    name="constant", label="frugal", config={"power": 0.15}
                ),
                ControllerConfig(name="constant", label="off", enabled=False),
                ControllerConfig(name="bang-bang", config={"threshold": 5}),
            ]
        )

        assert settings.preset("frugal").config == {"power": 0.15}
        assert settings.preset("off") is None
        assert settings.preset("bang-bang").name == "bang-bang"
        assert settings.preset("missing") is None


class TestControllerConfig:
    """Test cases for ControllerConfig model"""

    def test_controller_config_defaults(self):
        """Test controller config with defaults"""
        config = ControllerConfig(name="constant")

        assert config.name == "constant"
        assert config.label is None
        assert config.enabled is True
        assert config.config == {}
        assert config.key == "constant"

    def test_label_is_key(self):
        """Test that a label replaces the name as lookup key"""
        config = ControllerConfig(
            name="random-grid", label="random", config={"period": 0.5}
        )
        assert config.key == "random"


class TestConfigManager:
    """Test cases for ConfigManager"""

    def test_config_manager_initialization(self):
        """Test config manager initialization"""
        manager = ConfigManager()
        assert manager.config_path is None
        assert manager._settings is None

    def test_config_manager_with_path(self):
        """Test config manager with specific path"""
        test_path = "/test/config.yaml"
        manager = ConfigManager(test_path)
        assert str(manager.config_path) == test_path

    def test_load_default_config(self):
        """Test loading default configuration"""
        settings = ConfigManager().load_config()

        assert isinstance(settings, Settings)
        assert settings == Settings()

    def test_default_path_is_searched(self, tmp_path):
        """Test that a config.yaml on the search path is picked up"""
        (tmp_path / "config.yaml").write_text("workers: 3\n", encoding="utf-8")
        assert ConfigManager().load_config().workers == 3

    def test_load_config_from_file(self):
        """Test loading configuration from YAML file"""
        config_data = {
            "verbose": True,
            "output_format": "json",
            "controllers": [
                {
                    "name": "random-grid",
                    "label": "random",
                    "config": {"levels": "0,5,10", "period": 0.5},
                }
            ],
        }

        with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
            yaml.dump(config_data, f)
            temp_path = f.name

        try:
            settings = ConfigManager(temp_path).load_config()

            assert settings.verbose is True
            assert settings.output_format == "json"
            assert len(settings.controllers) == 1
            assert settings.controllers[0].key == "random"
            assert settings.controllers[0].config["period"] == 0.5
        finally:
            Path(temp_path).unlink()

    def test_load_config_from_json(self):
        """Test loading configuration from JSON file"""
        config_data = {"monte_carlo_samples": 500, "workers": 2}

        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            json.dump(config_data, f)
            temp_path = f.name

        try:
            settings = ConfigManager(temp_path).load_config()

            assert settings.monte_carlo_samples == 500
            assert settings.workers == 2
        finally:
            Path(temp_path).unlink()

    def test_environment_variable_override(self, monkeypatch, tmp_path):
        """Test environment variables win over the config file"""
        config_file = tmp_path / "settings.yaml"
        config_file.write_text("workers: 2\noutput_format: text\n", encoding="utf-8")
        monkeypatch.setenv("TASKENV_WORKERS", "4")
        monkeypatch.setenv("TASKENV_VERBOSE", "yes")
        monkeypatch.setenv("TASKENV_OUTPUT_FORMAT", "json")
        monkeypatch.setenv("TASKENV_ENUMERATION_CAP", "1000")

        settings = ConfigManager(str(config_file)).load_config()

        assert settings.workers == 4
        assert settings.verbose is True
        assert settings.output_format == "json"
        assert settings.enumeration_cap == 1000

    def test_invalid_environment_value(self, monkeypatch):
        """Test that an out-of-range environment value fails validation"""
        monkeypatch.setenv("TASKENV_WORKERS", "0")
        with pytest.raises(ValidationError):
            ConfigManager().load_config()

    def test_save_config(self):
        """Test saving configuration to file"""
        settings = Settings(
            verbose=True,
            controllers=[
                ControllerConfig(name="constant", label="idle", enabled=False)
            ],
        )

        with tempfile.TemporaryDirectory() as temp_dir:
            config_path = Path(temp_dir) / "nested" / "test_config.yaml"

            manager = ConfigManager()
            manager.save_config(settings, str(config_path))

            assert config_path.exists()

            with open(config_path, "r") as f:
                saved_data = yaml.safe_load(f)

            assert saved_data["verbose"] is True
            assert saved_data["controllers"][0]["label"] == "idle"
            assert Settings(**saved_data) == settings

    def test_non_integer_environment_value(self, monkeypatch):
        """Test that a count variable must parse as an integer"""
        monkeypatch.setenv("TASKENV_MONTE_CARLO_SAMPLES", "many")
        with pytest.raises(ValueError, match="TASKENV_MONTE_CARLO_SAMPLES"):
            ConfigManager().load_config()

    def test_save_config_as_json(self, tmp_path):
        """Test that a .json path is saved as JSON and loads back"""
        settings = Settings(output_format="json", workers=3)
        config_path = tmp_path / "settings.json"

        ConfigManager().save_config(settings, str(config_path))

        assert json.loads(config_path.read_text(encoding="utf-8"))["workers"] == 3
        assert ConfigManager(str(config_path)).load_config() == settings

    def test_settings_property_loads_once(self):
        """Test that the settings property caches the loaded settings"""
        manager = ConfigManager()
        first = manager.settings
        assert manager.settings is first

    def test_missing_explicit_file(self, tmp_path):
        """Test that an explicit path that does not exist is an error"""
        manager = ConfigManager(str(tmp_path / "absent.yaml"))
        with pytest.raises(ValueError, match="Config file not found"):
            manager.load_config()

    def test_invalid_config_file(self):
        """Test handling of invalid configuration file"""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
            f.write("invalid: yaml: content: [")
            temp_path = f.name

        try:
            manager = ConfigManager(temp_path)
            with pytest.raises(ValueError, match="Failed to load config file"):
                manager.load_config()
        finally:
            Path(temp_path).unlink()

    def test_non_mapping_config_file(self, tmp_path):
        """Test that a YAML list is rejected"""
        config_file = tmp_path / "list.yaml"
        config_file.write_text("- workers\n- 2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="must hold a mapping"):
            ConfigManager(str(config_file)).load_config()

    def test_unsupported_config_format(self):
        """Test handling of unsupported configuration file format"""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".txt", delete=False) as f:
            f.write("some content")
            temp_path = f.name

        try:
            manager = ConfigManager(temp_path)
            with pytest.raises(ValueError, match="Unsupported config file format"):
                manager.load_config()
        finally:
            Path(temp_path).unlink()


if __name__ == "__main__":
    pytest.main([__file__])
