"""Random initial parameters for every model family."""

from typing import Dict, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from pemid.diff.params import ParamVector
from pemid.models.nets import NetShape, init_ffn
from pemid.models.structure import ModelStructure, StateSpaceModel, build_layout


class InitOptions(BaseModel):
    """How initial parameters are drawn."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scheme: Literal["normal", "xavier"] = Field(
        default="normal", description="Network weight distribution"
    )
    net_sigma: Optional[float] = Field(
        default=None, gt=0, description="Network weight std (default 1/sqrt(fan_in))"
    )
    sigma: float = Field(default=0.1, ge=0, description="Std of random matrix entries")
    a_diag: float = Field(default=0.5, description="Diagonal of initial state matrices")
    zero_noise_output: bool = Field(
        default=True, description="Start with a noise model that does not affect y"
    )


def _net(
    shape: NetShape,
    prefix: str,
    options: InitOptions,
    rng: np.random.Generator,
    zero_output_rows: Optional[slice] = None,
) -> Dict[str, np.ndarray]:
    net = init_ffn(shape, options.scheme, options.net_sigma, rng)
    params = net.to_params(prefix)
    if zero_output_rows is not None:
        last = f"{prefix}.W{shape.n_layers - 1}"
        params[last] = params[last].copy()
        params[last][zero_output_rows] = 0.0
        if shape.bypass:
            params[f"{prefix}.L"] = params[f"{prefix}.L"].copy()
            params[f"{prefix}.L"][zero_output_rows] = 0.0
    return params


def _state_matrix(
    n: int, lead: Optional[int], options: InitOptions, rng: np.random.Generator
) -> np.ndarray:
    if lead is None:
        return options.a_diag * np.eye(n) + options.sigma * rng.standard_normal((n, n))
    out = options.sigma * rng.standard_normal((lead, n, n))
    out[0] += options.a_diag * np.eye(n)
    return out


def _random(shape: tuple, options: InitOptions, rng: np.random.Generator) -> np.ndarray:
    return options.sigma * rng.standard_normal(shape)


def init_params(
    ms: ModelStructure,
    seed: Union[int, np.random.Generator] = 0,
    options: Optional[InitOptions] = None,
) -> StateSpaceModel:
    """Draw a model: zero biases, random weights, zero feedthrough and zero ``w0``.

    State matrices start at ``a_diag * I`` plus noise; with ``zero_noise_output``
    the noise output map is zero so the predictor equals the simulator.
    """
    options = options or InitOptions()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layout = build_layout(ms)
    lead = ms.n_p + 1 if ms.is_lpv else None
    params: Dict[str, np.ndarray] = {}

    if ms.family == "nl":
        params.update(_net(ms.fx_shape, "x.f", options, rng))
        params.update(_net(ms.gx_shape, "y.g", options, rng))
    elif ms.is_lpv and ms.lpv_param == "ffn":
        params.update(_net(ms.plant_lpv_shape, "x.M", options, rng))
    else:
        params["x.A"] = _state_matrix(ms.nx, lead, options, rng)
        lead_shape = (lead,) if lead is not None else ()
        params["x.B"] = _random(lead_shape + (ms.nx, ms.nu), options, rng)
        params["y.C"] = _random(lead_shape + (ms.ny, ms.nx), options, rng)
        if ms.feedthrough:
            params["y.D"] = np.zeros(lead_shape + (ms.ny, ms.nu))

    if "psi.net.W0" in layout:
        params.update(_net(ms.psi_shape, "psi.net", options, rng))

    zero_out = options.zero_noise_output
    if ms.nz == 0 or ms.noise == "lti":
        params["z.A"] = _state_matrix(ms.nz, None, options, rng)
        params["z.B"] = _random((ms.nz, ms.ny), options, rng)
        c_shape: tuple = (ms.ny, ms.nz)
        params["e.C"] = np.zeros(c_shape) if zero_out else _random(c_shape, options, rng)
    elif ms.noise == "lpv" and ms.lpv_param == "ffn":
        c_rows = slice(ms.nz * ms.nz + ms.nz * ms.ny, None)
        params.update(_net(ms.noise_lpv_shape, "z.M", options, rng, c_rows if zero_out else None))
    elif ms.noise == "lpv":
        params["z.A"] = _state_matrix(ms.nz, lead, options, rng)
        params["z.B"] = _random((lead, ms.nz, ms.ny), options, rng)
        c_shape = (lead, ms.ny, ms.nz)
        params["e.C"] = np.zeros(c_shape) if zero_out else _random(c_shape, options, rng)
    else:
        params.update(_net(ms.fz_shape, "z.f", options, rng))
        params.update(_net(ms.gz_shape, "e.g", options, rng, slice(None) if zero_out else None))

    params["w0.x"] = np.zeros(ms.nx)
    params["w0.z"] = np.zeros(ms.nz)
    return StateSpaceModel(ms, ParamVector(layout.flatten(params), layout))
