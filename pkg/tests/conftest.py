"""Shared test fixtures and configuration."""

import tempfile
from pathlib import Path
from typing import Any, Dict, Generator

import pytest

from pemid.benchmarks.disk import GeneratedData, NoiseSpec, gen_lpv_disk, gen_lti_disk
from pemid.core.audit import AuditLogger
from pemid.core.config import ConfigManager
from pemid.core.engine import ExperimentEngine
from pemid.core.registry import BenchmarkRegistry
from pemid.metrics.dataset import Dataset
from pemid.models.structure import ModelStructure
from pemid.training.config import AdamOptions, QnOptions, TrainConfig


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def lti_generated() -> GeneratedData:
    """Short linearized-disk record with Box-Jenkins noise."""
    return gen_lti_disk(N=200, seed=0)


@pytest.fixture
def lti_data(lti_generated: GeneratedData) -> Dataset:
    return lti_generated.dataset


@pytest.fixture
def lti_test_data() -> Dataset:
    return gen_lti_disk(N=200, seed=1).dataset


@pytest.fixture
def lpv_external_generated() -> GeneratedData:
    return gen_lpv_disk(noise=NoiseSpec(kind="bj_lpv"), N=200, seed=0, scheduling="external")


@pytest.fixture
def lti_structure() -> ModelStructure:
    """Combined LTI model with the orders of the linearized disk."""
    return ModelStructure(family="lti", nx=2, nz=1, feedthrough=False)


@pytest.fixture
def oe_structure() -> ModelStructure:
    return ModelStructure(family="lti", nx=2, nz=0, feedthrough=False)


@pytest.fixture
def fast_train_config() -> TrainConfig:
    """Few iterations: enough to move the parameters, cheap enough for unit tests."""
    return TrainConfig(
        adam=AdamOptions(iters=20, eta=1e-2),
        qn=QnOptions(max_iters=30),
        burn_in=20,
    )


@pytest.fixture
def config_manager() -> ConfigManager:
    """Create a config manager for testing."""
    return ConfigManager()


@pytest.fixture
def audit_logger(temp_dir: Path) -> AuditLogger:
    """Create an audit logger for testing."""
    return AuditLogger(str(temp_dir / "test_audit.jsonl"))


@pytest.fixture
def engine() -> ExperimentEngine:
    """Engine that writes audit logs into each run's output directory."""
    return ExperimentEngine(registry=BenchmarkRegistry(discover_entry_points=False))


@pytest.fixture
def experiment_config(temp_dir: Path) -> Dict[str, Any]:
    """Small LTI experiment writing under the temp directory."""
    return {
        "name": "test_experiment",
        "description": "Experiment for unit tests",
        "benchmark": {"kind": "lti_disk", "n_samples": 150, "seed": 3},
        "model": {"family": "lti", "nx": 2, "nz": 1, "feedthrough": False},
        "training": {
            "seeds": [0],
            "multistart": 2,
            "adam": {"iters": 10, "eta": 0.01},
            "qn": {"max_iters": 20},
            "burn_in": 20,
        },
        "paths": {"out_dir": str(temp_dir / "run")},
    }
