"""Excitation signals and signal statistics."""

import math
from typing import Any, Union

import numpy as np

from pemid.metrics.scores import sample_variance

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """PCG64 generator from an int, a SeedSequence or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def hold_length(bandwidth_hz: float, Ts: float) -> int:
    # rounding guards against 19.999999 from float division
    return max(1, math.ceil(round(1.0 / (2.0 * bandwidth_hz * Ts), 9)))


def random_binary_signal(N: int, bandwidth_hz: float, Ts: float, seed: SeedLike = 0) -> np.ndarray:
    """Piecewise-constant 0/1 levels, each Bernoulli(1/2) and held ``ceil(1/(2 bw Ts))`` samples."""
    nyquist = 1.0 / (2.0 * Ts)
    if not 0.0 < bandwidth_hz <= nyquist * (1.0 + 1e-12):
        raise ValueError(f"bandwidth must be in (0, {nyquist:g}] Hz, got {bandwidth_hz:g}")
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    hold = hold_length(bandwidth_hz, Ts)
    levels = as_generator(seed).integers(0, 2, size=math.ceil(N / hold))
    return np.repeat(levels, hold)[:N].astype(np.float64)


def snr_db(y0: Any, v: Any) -> float:
    """``10 log10(Var(y0) / Var(v))``; ``inf`` when the noise variance is zero."""
    noise = sample_variance(v)
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(sample_variance(y0) / noise)
