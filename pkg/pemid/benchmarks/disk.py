"""Unbalanced disk: nonlinear, linearized and LPV data-generating systems.

States are ``x = (angular velocity, angle)``; the measured output is the angle
plus a disturbance ``v`` produced by a Box-Jenkins filter driven by white ``e``.
Each generator draws ``u``, ``e`` and the scheduling noise from separate child
streams of one ``numpy.random.SeedSequence``, so the same seed yields the same
input across generators.
"""

from dataclasses import dataclass
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pemid.benchmarks.signals import SeedLike, random_binary_signal, snr_db
from pemid.metrics.dataset import Dataset, Truth
from pemid.models.structure import ModelStructure, OracleScheduling, StateSpaceModel

Scheduling = Literal["external", "self"]
Step = Callable[[np.ndarray, float, int], Tuple[np.ndarray, float]]

# e variance of the self-scheduled records; the nonlinear disk reaches about 21 dB
SELF_SCHEDULED_VARIANCE = 2.5e-4


class DiskParams(BaseModel):
    """Physical constants of the disk and the sampling period."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tau: float = Field(default=0.6, gt=0, description="Lumped back-EMF constant [s]")
    Km: float = Field(default=14.65, gt=0, description="Motor constant")
    J: float = Field(default=2.2e-4, gt=0, description="Disk inertia [kg m^2]")
    m: float = Field(default=0.07, gt=0, description="Lumped mass [kg]")
    g: float = Field(default=9.8, gt=0, description="Gravity [m/s^2]")
    l: float = Field(default=0.042, gt=0, description="Mass distance from the center [m]")
    Ts: float = Field(default=0.01, gt=0, description="Sampling period [s]")

    def matrices(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(A0, A1, B, C)`` of the Euler-discretized model with ``A(p) = A0 + p A1``.

        ``A1`` isolates the gravity term, so ``p = sinc(angle)`` recovers the
        nonlinear dynamics and ``p = 1`` the linearization at rest.
        """
        Ts = self.Ts
        A0 = np.array([[1.0 - Ts / self.tau, 0.0], [Ts, 1.0]])
        A1 = np.array([[0.0, -self.m * self.g * self.l * Ts / self.J], [0.0, 0.0]])
        B = np.array([[Ts * self.Km / self.tau], [0.0]])
        C = np.array([[0.0, 1.0]])
        return A0, A1, B, C


class NoiseSpec(BaseModel):
    """Disturbance ``v``: white, or Box-Jenkins ``z+ = a(p) z + b(p) e``, ``v = z + e``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["white", "bj_lti", "bj_lpv"] = "bj_lti"
    variance: float = Field(default=3.75e-3, ge=0, description="Variance of e")
    az0: float = 277.0 / 300.0
    az1: float = 2.0 / 30.0
    bz0: float = 41.0 / 150.0
    bz1: float = -11.0 / 60.0

    @model_validator(mode="after")
    def check_stable(self) -> "NoiseSpec":
        if abs(self.az0) + abs(self.az1) >= 1.0:
            raise ValueError("Noise filter must satisfy |az0| + |az1| < 1 for |p| <= 1")
        return self

    def coefficients(self, p: float) -> Tuple[float, float]:
        """``(a, b)`` at scheduling value ``p``; the LTI filter uses ``p = 1``."""
        if self.kind == "bj_lti":
            p = 1.0
        return self.az0 + self.az1 * p, self.bz0 + self.bz1 * p


@dataclass
class GeneratedData:
    dataset: Dataset
    truth: Truth

    @property
    def snr_db(self) -> float:
        return snr_db(self.truth.y0, self.truth.v)


def _streams(
    seed: SeedLike, N: int, variance: float
) -> Tuple[np.ndarray, np.ndarray, np.random.SeedSequence]:
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    u_seq, e_seq, p_seq = ss.spawn(3)
    u = np.random.default_rng(u_seq).standard_normal(N)
    e = np.sqrt(variance) * np.random.default_rng(e_seq).standard_normal(N)
    return u, e, p_seq


def _check_length(N: int) -> None:
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")


def _simulate(
    params: DiskParams,
    noise: NoiseSpec,
    u: np.ndarray,
    e: np.ndarray,
    step: Step,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run ``step(x, u_k, k) -> (x+, p_k)`` from rest and the noise filter alongside."""
    N = len(u)
    C = params.matrices()[3]
    x = np.zeros(2)
    z = 0.0
    y0 = np.zeros(N)
    v = np.zeros(N)
    p = np.ones(N)
    for k in range(N):
        y0[k] = (C @ x)[0]
        x_next, p[k] = step(x, u[k], k)
        if noise.kind == "white":
            v[k] = e[k]
        else:
            a, b = noise.coefficients(p[k])
            v[k] = z + e[k]
            z = a * z + b * e[k]
        x = x_next
    return y0, v, p


def _result(
    params: DiskParams,
    u: np.ndarray,
    y0: np.ndarray,
    v: np.ndarray,
    e: np.ndarray,
    name: str,
    p: Optional[np.ndarray] = None,
) -> GeneratedData:
    y = y0 + v
    dataset = Dataset(
        u=u[:, None],
        y=y[:, None],
        p=None if p is None else p[:, None],
        Ts=params.Ts,
        name=name,
    )
    return GeneratedData(dataset, Truth(y0=y0, v=v, e=e))


def _affine_step(params: DiskParams, p_of: Callable[[np.ndarray, int], float]) -> Step:
    A0, A1, B, _ = params.matrices()

    def step(x: np.ndarray, u_k: float, k: int) -> Tuple[np.ndarray, float]:
        p = p_of(x, k)
        return (A0 + A1 * p) @ x + B[:, 0] * u_k, p

    return step


def gen_lti_disk(
    params: Optional[DiskParams] = None,
    noise: Optional[NoiseSpec] = None,
    N: int = 2000,
    seed: SeedLike = 0,
) -> GeneratedData:
    """Linearization at rest, ``u ~ N(0, 1)``, with the LTI Box-Jenkins disturbance."""
    params, noise = params or DiskParams(), noise or NoiseSpec()
    _check_length(N)
    if noise.kind == "bj_lpv":
        noise = noise.model_copy(update={"kind": "bj_lti"})
    u, e, _ = _streams(seed, N, noise.variance)
    y0, v, _ = _simulate(params, noise, u, e, _affine_step(params, lambda x, k: 1.0))
    return _result(params, u, y0, v, e, "lti_disk")


def external_scheduling(
    N: int, Ts: float, p_mag: float = 0.25, bandwidth_factor: float = 0.05, seed: SeedLike = 0
) -> np.ndarray:
    """``p_k = (1 - p_mag) + p_mag n_k`` with ``n_k`` binary of bandwidth ``factor/(2 Ts)`` Hz."""
    n = random_binary_signal(N, bandwidth_factor / (2.0 * Ts), Ts, seed)
    return (1.0 - p_mag) + p_mag * n


def gen_lpv_disk(
    params: Optional[DiskParams] = None,
    noise: Optional[NoiseSpec] = None,
    N: int = 2000,
    seed: SeedLike = 0,
    scheduling: Scheduling = "external",
    p_mag: float = 0.25,
    bandwidth_factor: float = 0.05,
) -> GeneratedData:
    """LPV disk with a scheduling-dependent disturbance.

    ``external``: ``p`` is a random binary signal, stored in the dataset.
    ``self``: ``p = sinc(angle)`` is computed from the state and not stored.
    Without an explicit ``noise`` the self-scheduled disturbance is smaller
    (``SELF_SCHEDULED_VARIANCE``).
    """
    params = params or DiskParams()
    if noise is None:
        variance = SELF_SCHEDULED_VARIANCE if scheduling == "self" else NoiseSpec().variance
        noise = NoiseSpec(kind="bj_lpv", variance=variance)
    _check_length(N)
    u, e, p_seq = _streams(seed, N, noise.variance)
    if scheduling == "external":
        p_ext = external_scheduling(N, params.Ts, p_mag, bandwidth_factor, p_seq)
        step = _affine_step(params, lambda x, k: float(p_ext[k]))
    else:
        step = _affine_step(params, lambda x, k: float(np.sinc(x[1] / np.pi)))
    y0, v, p = _simulate(params, noise, u, e, step)
    stored = p if scheduling == "external" else None
    return _result(params, u, y0, v, e, f"lpv_disk_{scheduling}", stored)


def gen_nl_disk(
    params: Optional[DiskParams] = None,
    noise: Optional[NoiseSpec] = None,
    N: int = 2000,
    seed: SeedLike = 0,
) -> GeneratedData:
    """Forward-Euler discretization of the nonlinear disk equation."""
    params, noise = params or DiskParams(), noise or NoiseSpec()
    _check_length(N)
    u, e, _ = _streams(seed, N, noise.variance)
    Ts = params.Ts
    gravity = params.m * params.g * params.l / params.J

    def step(x: np.ndarray, u_k: float, k: int) -> Tuple[np.ndarray, float]:
        velocity, angle = x
        accel = -velocity / params.tau + params.Km / params.tau * u_k - gravity * np.sin(angle)
        p = float(np.sinc(angle / np.pi)) if noise.kind == "bj_lpv" else 1.0
        return np.array([velocity + Ts * accel, angle + Ts * velocity]), p

    y0, v, _ = _simulate(params, noise, u, e, step)
    return _result(params, u, y0, v, e, "nl_disk")


def _noise_leaves(noise: NoiseSpec, affine: bool) -> dict:
    """Inverse Box-Jenkins filter: ``z+ = (a - b) z + b v``, ``e = v - z``."""
    if noise.kind == "white":
        return {"z.A": np.zeros((0, 0)), "z.B": np.zeros((0, 1)), "e.C": np.zeros((1, 0))}
    if affine:
        return {
            "z.A": np.array([[[noise.az0 - noise.bz0]], [[noise.az1 - noise.bz1]]]),
            "z.B": np.array([[[noise.bz0]], [[noise.bz1]]]),
            "e.C": np.array([[[-1.0]], [[0.0]]]),
        }
    a, b = noise.coefficients(1.0)
    return {"z.A": np.array([[a - b]]), "z.B": np.array([[b]]), "e.C": np.array([[-1.0]])}


def disk_true_model(
    params: Optional[DiskParams] = None,
    noise: Optional[NoiseSpec] = None,
    kind: Literal["lti", "external", "self", "nl"] = "lti",
) -> StateSpaceModel:
    """The data-generating system written as a model of this library.

    The nonlinear disk is exact as a self-scheduled LPV model with the fixed
    map ``p = sinc(angle)``.
    """
    params, noise = params or DiskParams(), noise or NoiseSpec()
    A0, A1, B, C = params.matrices()
    nz = 0 if noise.kind == "white" else 1
    lpv_noise = noise.kind == "bj_lpv" and kind != "lti"
    if kind == "lti":
        ms = ModelStructure(family="lti", nx=2, nz=nz, feedthrough=False)
        leaves = {"x.A": A0 + A1, "x.B": B, "y.C": C}
    else:
        family = "lpv_external" if kind == "external" else "lpv_self"
        oracle = OracleScheduling(state_index=1) if family == "lpv_self" else None
        ms = ModelStructure(
            family=family,
            nx=2,
            nz=nz,
            n_p=1,
            feedthrough=False,
            noise="lpv" if lpv_noise and nz else "lti",
            oracle_scheduling=oracle,
        )
        leaves = {
            "x.A": np.stack([A0, A1]),
            "x.B": np.stack([B, np.zeros_like(B)]),
            "y.C": np.stack([C, np.zeros_like(C)]),
        }
    leaves.update(_noise_leaves(noise, affine=lpv_noise and nz > 0))
    leaves["w0.x"] = np.zeros(2)
    leaves["w0.z"] = np.zeros(nz)
    return StateSpaceModel.from_leaves(ms, leaves)
