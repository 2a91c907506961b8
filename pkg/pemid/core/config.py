"""Experiment configuration and its loading."""

import os
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from pemid.benchmarks.base import BenchmarkConfig
from pemid.core.exceptions import ExperimentConfigError
from pemid.core.files import atomic_write_text
from pemid.models.structure import ModelStructure
from pemid.training.config import SelectionConfig, TrainConfig

OUTPUT_ROOT_ENV = "PEMID_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"
RESOLVED_CONFIG_NAME = "resolved_config.yml"


class PathsConfig(BaseModel):
    """Where datasets, models and reports of an experiment live."""

    model_config = ConfigDict(extra="forbid")

    out_dir: Optional[str] = Field(
        default=None, description=f"Output directory (default ${OUTPUT_ROOT_ENV}/<name>)"
    )
    data_dir: Optional[str] = Field(
        default=None, description="Dataset directory (default <out_dir>/data)"
    )
    train_file: str = Field(default="train.csv")
    test_file: str = Field(default="test.csv")
    model_file: str = Field(default="model.yml")


class ExperimentConfig(BaseModel):
    """One reproducible experiment: data generation, model structure and training."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="experiment", description="Experiment name")
    description: Optional[str] = Field(default=None, description="Experiment description")
    benchmark: BenchmarkConfig = Field(default_factory=BenchmarkConfig)
    model: ModelStructure = Field(default_factory=ModelStructure)
    training: TrainConfig = Field(default_factory=TrainConfig)
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("Experiment name cannot be empty or whitespace only")
        if re.search(r"[\\/]", v):
            raise ValueError("Experiment name cannot contain path separators")
        return v.strip()

    def output_dir(self, override: Optional[Union[str, Path]] = None) -> Path:
        """``override``, then ``paths.out_dir``, then ``$PEMID_OUTPUT_ROOT/<name>``."""
        if override is not None:
            return Path(override)
        if self.paths.out_dir is not None:
            return Path(self.paths.out_dir)
        return Path(os.getenv(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT) / self.name

    def data_dir(self, out_dir: Path) -> Path:
        return Path(self.paths.data_dir) if self.paths.data_dir else out_dir / "data"


class ConfigManager:
    """Loads experiment configs with environment substitution and search paths."""

    def __init__(self, config_search_paths: Optional[List[str]] = None):
        self.env_pattern = re.compile(r"\$\{([^}]+)\}")
        self.config_search_paths = list(config_search_paths or [])
        self._add_default_search_paths()

    def _add_default_search_paths(self) -> None:
        default_paths = [os.getcwd(), os.path.expanduser("~/.pemid")]
        if os.name == "posix":
            default_paths.append("/etc/pemid")
        for path in default_paths:
            if path not in self.config_search_paths:
                self.config_search_paths.append(path)

    def find_config_file(self, config_filename: str) -> Optional[str]:
        for search_path in self.config_search_paths:
            config_path = Path(search_path) / config_filename
            if config_path.is_file():
                return str(config_path)
        return None

    def load_raw_config(self, config_path: Union[str, Path]) -> Dict[str, Any]:
        """Read a YAML config file and substitute ``${VAR}`` / ``${VAR:default}``.

        Raises:
            ExperimentConfigError: If the file is missing, empty or not valid YAML
        """
        config_path = str(config_path)
        if os.path.sep not in config_path and not Path(config_path).exists():
            found_path = self.find_config_file(config_path)
            if found_path:
                config_path = found_path

        config_file = Path(config_path)
        if not config_file.exists():
            raise ExperimentConfigError(f"Configuration file not found: {config_path}")
        if not config_file.is_file():
            raise ExperimentConfigError(f"Configuration path is not a file: {config_path}")

        try:
            with open(config_file, "r", encoding="utf-8") as f:
                raw_config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ExperimentConfigError(
                f"Error parsing YAML configuration file {config_path}: {e}"
            ) from e
        except PermissionError as e:
            raise ExperimentConfigError(
                f"Permission denied reading configuration file: {config_path}"
            ) from e

        if raw_config is None:
            raise ExperimentConfigError(f"Configuration file is empty: {config_path}")
        if not isinstance(raw_config, dict):
            raise ExperimentConfigError(f"Configuration file must hold a mapping: {config_path}")
        result: Dict[str, Any] = self._substitute_env_vars(raw_config)
        return result

    def load_experiment_config(
        self,
        config_path: Union[str, Path],
        overrides: Optional[Dict[str, Any]] = None,
    ) -> ExperimentConfig:
        """Load, merge CLI overrides into and validate an experiment config."""
        raw = self.load_raw_config(config_path)
        if overrides:
            raw = self.merge_configs(raw, overrides)
        return self.build_config(raw, str(config_path))

    def build_config(self, raw: Dict[str, Any], source: str = "<memory>") -> ExperimentConfig:
        try:
            return ExperimentConfig(**raw)
        except Exception as e:
            raise ExperimentConfigError(f"Invalid configuration {source}: {e}") from e

    def _substitute_env_vars(self, obj: Any) -> Any:
        if isinstance(obj, dict):
            return {key: self._substitute_env_vars(value) for key, value in obj.items()}
        if isinstance(obj, list):
            return [self._substitute_env_vars(item) for item in obj]
        if isinstance(obj, str):
            return self._substitute_string_env_vars(obj)
        return obj

    def _substitute_string_env_vars(self, text: str) -> str:
        def replace_var(match: re.Match[str]) -> str:
            var_spec = match.group(1)
            if ":" in var_spec:
                var_name, default_value = var_spec.split(":", 1)
            else:
                var_name, default_value = var_spec, ""
            return os.getenv(var_name.strip(), default_value)

        return self.env_pattern.sub(replace_var, text)

    def validate_config_schema(self, config_dict: Dict[str, Any]) -> bool:
        """Validate a config mapping without keeping the object.

        Raises:
            ExperimentConfigError: If the configuration is invalid
        """
        self.build_config(config_dict)
        return True

    def merge_configs(
        self, base_config: Dict[str, Any], override_config: Dict[str, Any]
    ) -> Dict[str, Any]:
        """Deep merge; values in ``override_config`` win."""

        def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
            merged = base.copy()
            for key, value in override.items():
                if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
                    merged[key] = deep_merge(merged[key], value)
                else:
                    merged[key] = value
            return merged

        return deep_merge(base_config, override_config)

    def save_resolved_config(self, config: ExperimentConfig, out_dir: Union[str, Path]) -> Path:
        """Write the fully resolved config next to a run's outputs."""
        text = yaml.safe_dump(
            config.model_dump(mode="json"), sort_keys=False, default_flow_style=False
        )
        return atomic_write_text(Path(out_dir) / RESOLVED_CONFIG_NAME, text)
