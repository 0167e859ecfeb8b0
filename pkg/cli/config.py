"""
Experiment configuration and its JSON/YAML persistence.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from evaluation.config import ProtocolConfig
from gltr_model.config import ModelConfig
from shared.exceptions import ConfigurationError
from synth_data.config import BenchmarkConfig
from trainer.config import TrainConfig

logger = logging.getLogger(__name__)


def _default_model() -> ModelConfig:
    return ModelConfig(frame_dim=16, num_identities=20)


class ExperimentConfig(BaseModel):
    """
    Everything one CLI run depends on.

    ``seed`` is the master seed: dataset generation, parameter
    initialization and clip sampling are all derived from it.
    """

    model_config = ConfigDict(validate_assignment=True, extra='forbid')

    model: ModelConfig = Field(default_factory=_default_model)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: BenchmarkConfig = Field(default_factory=BenchmarkConfig)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    output_dir: str = Field(default="runs/default", min_length=1, description="Directory receiving every output")
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Master seed")
    threads: int = Field(default=1, ge=1, description="Worker thread cap")
    train_features: Optional[str] = Field(default=None, description="Training feature file (default: <out>/train.glfv)")
    query_features: Optional[str] = Field(default=None, description="Query feature file (default: <out>/query.glfv)")
    gallery_features: Optional[str] = Field(default=None, description="Gallery feature file (default: <out>/gallery.glfv)")

    @model_validator(mode='after')
    def validate_protocol(self) -> 'ExperimentConfig':
        """Cross-camera matching needs a second camera."""
        if self.protocol.cross_camera_only and self.data.cameras < 2:
            raise ValueError(f'cross_camera_only requires at least 2 cameras, got {self.data.cameras}')
        return self

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def feature_path(self, split: str) -> Path:
        """Configured feature file of ``split`` (train, query or gallery)."""
        explicit = getattr(self, f"{split}_features")
        return Path(explicit) if explicit else self.output_path / f"{split}.glfv"


def _set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


class ConfigManager:
    """
    Loads, overrides and saves experiment configurations.
    """

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        """
        Initialize configuration manager.

        Args:
            config_path: JSON or YAML file to load (optional)
        """
        self.config_path = Path(config_path) if config_path else None
        self._config = ExperimentConfig()

        if self.config_path:
            self.load_config()

    @property
    def config(self) -> ExperimentConfig:
        """Get current configuration."""
        return self._config

    def load_config(self, config_path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
        """
        Load configuration from a JSON or YAML file.

        Raises:
            ConfigurationError: Missing file, unsupported suffix, parse or validation failure
        """
        if config_path:
            self.config_path = Path(config_path)
        if not self.config_path or not self.config_path.exists():
            raise ConfigurationError("configuration file not found",
                                     config_path=str(self.config_path) if self.config_path else None)

        suffix = self.config_path.suffix.lower()
        try:
            with open(self.config_path, 'r') as f:
                if suffix in ('.yaml', '.yml'):
                    config_data = yaml.safe_load(f) or {}
                elif suffix == '.json':
                    config_data = json.load(f)
                else:
                    raise ConfigurationError(f"Unsupported config file format: {suffix}",
                                             config_path=str(self.config_path))
        except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(f"failed to parse configuration: {e}", config_path=str(self.config_path))

        self._config = self._validate(config_data)
        logger.debug(f"Loaded configuration from {self.config_path}")
        return self._config

    def save_config(self, config_path: Optional[Union[str, Path]] = None) -> Path:
        """
        Save configuration to a JSON or YAML file.
        """
        if config_path:
            self.config_path = Path(config_path)
        if not self.config_path:
            raise ConfigurationError("No config path specified")

        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        config_dict = self._config.model_dump(mode='json')
        suffix = self.config_path.suffix.lower()
        with open(self.config_path, 'w') as f:
            if suffix in ('.yaml', '.yml'):
                yaml.safe_dump(config_dict, f, default_flow_style=False, indent=2, sort_keys=False)
            elif suffix == '.json':
                json.dump(config_dict, f, indent=2)
            else:
                raise ConfigurationError(f"Unsupported config file format: {suffix}",
                                         config_path=str(self.config_path))
        return self.config_path

    def update_config(self, **overrides: Any) -> ExperimentConfig:
        """
        Apply overrides; dotted keys reach nested sections (``model.use_tsa=False``).

        ``None`` values are ignored so unset CLI flags do not clobber the file.
        """
        current = self._config.model_dump(mode='json')
        for key, value in overrides.items():
            if value is not None:
                _set_dotted(current, key, value)
        self._config = self._validate(current)
        return self._config

    def _validate(self, data: Dict[str, Any]) -> ExperimentConfig:
        try:
            return ExperimentConfig(**data)
        except ValidationError as e:
            errors = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
            raise ConfigurationError("invalid experiment configuration",
                                     config_path=str(self.config_path) if self.config_path else None,
                                     validation_errors=errors)
