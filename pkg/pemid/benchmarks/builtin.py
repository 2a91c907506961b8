"""Built-in unbalanced-disk benchmark generators."""

from pemid.benchmarks.base import BenchmarkGenerator
from pemid.benchmarks.disk import (
    SELF_SCHEDULED_VARIANCE,
    GeneratedData,
    NoiseSpec,
    disk_true_model,
    gen_lpv_disk,
    gen_lti_disk,
    gen_nl_disk,
)
from pemid.benchmarks.signals import SeedLike
from pemid.core.exceptions import BenchmarkError
from pemid.models.structure import StateSpaceModel


class LtiDiskBenchmark(BenchmarkGenerator):
    """Linearized disk with LTI Box-Jenkins noise."""

    __plugin_name__ = "lti_disk"
    __version__ = "1.0.0"
    __description__ = "Linearized unbalanced disk with LTI Box-Jenkins noise"

    def _validate_config(self) -> None:
        if self.noise.kind == "bj_lpv":
            raise BenchmarkError("lti_disk takes white or bj_lti noise")

    def generate(self, N: int, seed: SeedLike) -> GeneratedData:
        return gen_lti_disk(self.config.disk, self.noise, N, seed)

    def true_model(self) -> StateSpaceModel:
        return disk_true_model(self.config.disk, self.noise, "lti")


class LpvDiskExternalBenchmark(BenchmarkGenerator):
    """LPV disk scheduled by a measured random binary signal."""

    __plugin_name__ = "lpv_disk_external"
    __version__ = "1.0.0"
    __description__ = "LPV unbalanced disk with external scheduling and LPV noise"

    default_noise = NoiseSpec(kind="bj_lpv")

    def generate(self, N: int, seed: SeedLike) -> GeneratedData:
        return gen_lpv_disk(
            self.config.disk,
            self.noise,
            N,
            seed,
            "external",
            self.config.p_mag,
            self.config.bandwidth_factor,
        )

    def true_model(self) -> StateSpaceModel:
        return disk_true_model(self.config.disk, self.noise, "external")


class LpvDiskSelfBenchmark(BenchmarkGenerator):
    """LPV disk scheduled by ``sinc(angle)``, i.e. the nonlinear disk."""

    __plugin_name__ = "lpv_disk_self"
    __version__ = "1.0.0"
    __description__ = "Self-scheduled LPV unbalanced disk with LPV noise"

    default_noise = NoiseSpec(kind="bj_lpv", variance=SELF_SCHEDULED_VARIANCE)

    def generate(self, N: int, seed: SeedLike) -> GeneratedData:
        return gen_lpv_disk(self.config.disk, self.noise, N, seed, "self")

    def true_model(self) -> StateSpaceModel:
        return disk_true_model(self.config.disk, self.noise, "self")


class NlDiskBenchmark(BenchmarkGenerator):
    """Euler-discretized nonlinear disk."""

    __plugin_name__ = "nl_disk"
    __version__ = "1.0.0"
    __description__ = "Nonlinear unbalanced disk with Box-Jenkins noise"

    def generate(self, N: int, seed: SeedLike) -> GeneratedData:
        return gen_nl_disk(self.config.disk, self.noise, N, seed)

    def true_model(self) -> StateSpaceModel:
        return disk_true_model(self.config.disk, self.noise, "nl")


BUILTIN_BENCHMARKS = {
    cls.__plugin_name__: cls
    for cls in (LtiDiskBenchmark, LpvDiskExternalBenchmark, LpvDiskSelfBenchmark, NlDiskBenchmark)
}
