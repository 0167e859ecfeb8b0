"""
Tests for experiment configuration loading, overrides and persistence.
"""

import json

import pytest
import yaml

from cli.config import ConfigManager, ExperimentConfig
from shared.exceptions import ConfigurationError


class TestExperimentConfig:
    """Test cases for ExperimentConfig."""

    def test_defaults(self):
        """Test the default experiment layout."""
        config = ExperimentConfig()
        assert config.model.frame_dim == 16
        assert config.model.num_identities == 20
        assert config.train.total_epochs == 400
        assert config.protocol.cross_camera_only is True
        assert config.feature_path("query").as_posix() == "runs/default/query.glfv"

    def test_explicit_feature_path(self):
        """Test that an explicit file overrides the output-directory default."""
        config = ExperimentConfig(gallery_features="/data/g.glfv")
        assert config.feature_path("gallery").as_posix() == "/data/g.glfv"

    def test_single_camera_needs_all_cameras_protocol(self):
        """Test that one camera with cross-camera matching is rejected."""
        with pytest.raises(ValueError, match="cross_camera_only"):
            ExperimentConfig(data={"cameras": 1})
        config = ExperimentConfig(data={"cameras": 1}, protocol={"cross_camera_only": False})
        assert config.data.cameras == 1

    def test_unknown_keys_rejected(self):
        """Test that misspelled keys fail validation."""
        with pytest.raises(ValueError):
            ExperimentConfig(modle={})


class TestConfigManager:
    """Test cases for ConfigManager."""

    def test_yaml_round_trip(self, tmp_path):
        """Test saving and reloading a YAML configuration."""
        manager = ConfigManager()
        manager.update_config(**{"seed": 11, "model.use_tsa": False, "train.total_epochs": 5,
                                 "train.lr_decay_epoch": 3})
        path = manager.save_config(tmp_path / "exp.yaml")
        assert yaml.safe_load(path.read_text())["seed"] == 11

        reloaded = ConfigManager(path).config
        assert reloaded == manager.config
        assert reloaded.model.variant_name == "dtp_only"

    def test_json_round_trip(self, tmp_path):
        """Test saving and reloading a JSON configuration."""
        manager = ConfigManager()
        manager.update_config(output_dir=str(tmp_path / "run"), threads=3)
        path = manager.save_config(tmp_path / "exp.json")
        assert json.loads(path.read_text())["threads"] == 3
        assert ConfigManager(path).config == manager.config

    def test_none_overrides_ignored(self):
        """Test that unset flags keep the configured values."""
        manager = ConfigManager()
        manager.update_config(seed=4)
        assert manager.update_config(seed=None).seed == 4

    def test_missing_file(self, tmp_path):
        """Test that a missing configuration file is reported."""
        with pytest.raises(ConfigurationError, match="not found"):
            ConfigManager(tmp_path / "absent.yaml")

    def test_unsupported_suffix(self, tmp_path):
        """Test that only JSON and YAML files are accepted."""
        path = tmp_path / "exp.toml"
        path.write_text("seed = 1")
        with pytest.raises(ConfigurationError, match="Unsupported"):
            ConfigManager(path)

    def test_unparseable_file(self, tmp_path):
        """Test that malformed JSON raises a configuration error."""
        path = tmp_path / "exp.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError, match="parse"):
            ConfigManager(path)

    def test_validation_errors_listed(self, tmp_path):
        """Test that field errors are collected with their dotted location."""
        path = tmp_path / "exp.yaml"
        path.write_text(yaml.safe_dump({"model": {"kernel_width": 4}, "seed": -1}))
        with pytest.raises(ConfigurationError) as info:
            ConfigManager(path)
        locations = " ".join(info.value.validation_errors)
        assert "model.kernel_width" in locations
        assert "seed" in locations

    def test_save_without_path(self):
        """Test that saving needs a destination."""
        with pytest.raises(ConfigurationError):
            ConfigManager().save_config()
