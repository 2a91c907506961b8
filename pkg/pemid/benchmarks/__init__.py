"""Seeded data generators for the unbalanced-disk benchmark family."""

from pemid.benchmarks.base import BenchmarkConfig, BenchmarkGenerator
from pemid.benchmarks.builtin import BUILTIN_BENCHMARKS
from pemid.benchmarks.disk import (
    SELF_SCHEDULED_VARIANCE,
    DiskParams,
    GeneratedData,
    NoiseSpec,
    disk_true_model,
    external_scheduling,
    gen_lpv_disk,
    gen_lti_disk,
    gen_nl_disk,
)
from pemid.benchmarks.signals import random_binary_signal, snr_db

__all__ = [
    "BUILTIN_BENCHMARKS",
    "SELF_SCHEDULED_VARIANCE",
    "BenchmarkConfig",
    "BenchmarkGenerator",
    "DiskParams",
    "GeneratedData",
    "NoiseSpec",
    "disk_true_model",
    "external_scheduling",
    "gen_lpv_disk",
    "gen_lti_disk",
    "gen_nl_disk",
    "random_binary_signal",
    "snr_db",
]
