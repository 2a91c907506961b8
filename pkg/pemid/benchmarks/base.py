"""Base benchmark generator plugin interface."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from pemid.benchmarks.disk import DiskParams, GeneratedData, NoiseSpec
from pemid.benchmarks.signals import SeedLike
from pemid.models.structure import ModelStructure, StateSpaceModel


class BenchmarkConfig(BaseModel):
    """Which generator to run and with which physical and noise settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: str = Field(default="lti_disk", description="Registered benchmark name")
    n_samples: int = Field(default=2000, ge=2, description="Samples per dataset")
    seed: int = Field(default=0, ge=0, description="Root seed for train and test data")
    disk: DiskParams = Field(default_factory=DiskParams)
    noise: Optional[NoiseSpec] = Field(
        default=None, description="Disturbance (default depends on the benchmark)"
    )
    p_mag: float = Field(default=0.25, ge=0, le=1, description="External scheduling amplitude")
    bandwidth_factor: float = Field(
        default=0.05, gt=0, le=1, description="Scheduling bandwidth as factor/(2 Ts) Hz"
    )


class BenchmarkGenerator(ABC):
    """Base class for all benchmark generators."""

    __plugin_name__: str = "Base Benchmark"
    __plugin_type__: str = "benchmark"
    __api_version__: str = "1.0"
    __description__: str = "Base benchmark generator"

    default_noise: NoiseSpec = NoiseSpec()

    def __init__(self) -> None:
        self.config = BenchmarkConfig()

    def setup(self, config: Any) -> None:
        """Setup generator with a BenchmarkConfig or a plain mapping."""
        if not isinstance(config, BenchmarkConfig):
            config = BenchmarkConfig(**dict(config))
        self.config = config
        self._validate_config()

    def _validate_config(self) -> None:
        """Validate generator configuration. Override in subclasses."""
        pass

    @property
    def noise(self) -> NoiseSpec:
        return self.config.noise or self.default_noise

    @abstractmethod
    def generate(self, N: int, seed: SeedLike) -> GeneratedData:
        """Generate one dataset with its hidden truth."""
        pass

    @abstractmethod
    def true_model(self) -> StateSpaceModel:
        """The data-generating system as a model of this library."""
        pass

    def model_structure(self, plant_only: bool = False) -> ModelStructure:
        """Suggested structure for identification: same family and orders as the truth."""
        ms = self.true_model().structure
        ms = ms.model_copy(update={"oracle_scheduling": None})
        return ms.plant_only() if plant_only else ms

    def get_info(self) -> Dict[str, Any]:
        return {
            "name": self.__plugin_name__,
            "api_version": self.__api_version__,
            "description": self.__description__,
            "noise": self.noise.kind,
        }
