"""Declarative model structures and their parameter layouts."""

from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pemid.core.exceptions import ModelStructureError
from pemid.diff.params import AxisLabel, ParamLayout, ParamSpec, ParamVector
from pemid.models.nets import NetShape, NetSpec

Family = Literal["lti", "lpv_external", "lpv_self", "nl"]
NoiseKind = Literal["lti", "lpv", "nl"]

W0_GROUP = "w0"


class OracleScheduling(BaseModel):
    """Fixed scheduling map ``p = sinc(x[state_index])`` with no parameters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["sinc"] = "sinc"
    state_index: int = Field(default=1, ge=0)


class ModelStructure(BaseModel):
    """One process model G and inverse noise model H^-1, described declaratively."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Family = Field(default="lti", description="Process model family")
    nx: int = Field(default=2, ge=1, description="Process state dimension")
    nz: int = Field(default=0, ge=0, description="Noise state dimension (0 = OE)")
    nu: int = Field(default=1, ge=1, description="Number of inputs")
    ny: int = Field(default=1, ge=1, description="Number of outputs")
    n_p: int = Field(default=0, ge=0, description="Scheduling dimension (LPV only)")
    feedthrough: bool = Field(default=True, description="Direct u-to-y term")
    noise: NoiseKind = Field(default="lti", description="Noise model family")
    lpv_param: Literal["affine", "ffn"] = Field(
        default="affine", description="LPV matrix-function parameterization"
    )
    psi: NetSpec = Field(
        default=NetSpec(hidden=(6, 6), activations=("sigmoid", "swish")),
        description="Scheduling map network (lpv_self)",
    )
    psi_inputs: Literal["x", "xu"] = Field(
        default="xu", description="Scheduling map arguments"
    )
    oracle_scheduling: Optional[OracleScheduling] = Field(
        default=None, description="Fixed scheduling map replacing psi"
    )
    lpv_net: NetSpec = Field(
        default=NetSpec(hidden=(8,), activations=("tanh",)),
        description="Network for ffn matrix functions",
    )
    fx: NetSpec = Field(
        default=NetSpec(hidden=(15, 10), activations=("swish", "swish")),
        description="State map network (nl)",
    )
    gx: NetSpec = Field(default=NetSpec(), description="Output map network (nl)")
    fz: NetSpec = Field(
        default=NetSpec(hidden=(8,), activations=("tanh",)),
        description="Raw noise state network (nl noise)",
    )
    gz: NetSpec = Field(
        default=NetSpec(hidden=(8,), activations=("tanh",)),
        description="Raw noise output network (nl noise)",
    )

    @model_validator(mode="after")
    def check_family(self) -> "ModelStructure":
        if self.is_lpv and self.n_p < 1:
            raise ValueError(f"Family '{self.family}' needs n_p >= 1")
        if not self.is_lpv and self.n_p != 0:
            raise ValueError(f"Family '{self.family}' takes no scheduling (n_p=0)")
        if self.noise == "lpv" and not self.is_lpv:
            raise ValueError("LPV noise models need an LPV family")
        if self.family == "lpv_self" and self.lpv_param != "affine":
            raise ValueError("Self-scheduled models use affine matrix functions")
        if self.oracle_scheduling is not None:
            if self.family != "lpv_self":
                raise ValueError("Oracle scheduling applies to lpv_self only")
            if self.n_p != 1 or self.oracle_scheduling.state_index >= self.nx:
                raise ValueError("Oracle scheduling needs n_p=1 and a valid state index")
        return self

    @property
    def is_lpv(self) -> bool:
        return self.family in ("lpv_external", "lpv_self")

    @property
    def needs_scheduling_data(self) -> bool:
        return self.family == "lpv_external"

    @property
    def nw(self) -> int:
        return self.nx + self.nz

    def plant_only(self) -> "ModelStructure":
        return self.model_copy(update={"nz": 0})

    def resized(self, nx: int, nz: int, n_p: int) -> "ModelStructure":
        return ModelStructure(**{**self.model_dump(), "nx": nx, "nz": nz, "n_p": n_p})

    # network shapes
    @property
    def psi_shape(self) -> NetShape:
        n_in = self.nx if self.psi_inputs == "x" else self.nx + self.nu
        return self.psi.shape(n_in, self.n_p)

    @property
    def plant_lpv_shape(self) -> NetShape:
        n_out = self.nx * (self.nx + self.nu) + self.ny * self.nx
        if self.feedthrough:
            n_out += self.ny * self.nu
        return self.lpv_net.shape(self.n_p, n_out)

    @property
    def noise_lpv_shape(self) -> NetShape:
        return self.lpv_net.shape(self.n_p, self.nz * self.nz + 2 * self.ny * self.nz)

    @property
    def fx_shape(self) -> NetShape:
        return self.fx.shape(self.nx + self.nu, self.nx)

    @property
    def gx_shape(self) -> NetShape:
        n_in = self.nx + self.nu if self.feedthrough else self.nx
        return self.gx.shape(n_in, self.ny)

    @property
    def fz_shape(self) -> NetShape:
        return self.fz.shape(self.nz + self.nx + self.nu + self.ny, self.nz)

    @property
    def gz_shape(self) -> NetShape:
        return self.gz.shape(self.nz + self.nx + self.nu, self.ny)


def _tags(role: str, n: int) -> Tuple[AxisLabel, ...]:
    return tuple(((role, i),) for i in range(n))


def _blank(n: int) -> Tuple[AxisLabel, ...]:
    return ((),) * n


def _block_tags(rows: Sequence[AxisLabel], cols: Sequence[AxisLabel]) -> List[AxisLabel]:
    return [tuple(r) + tuple(c) for r in rows for c in cols]


def _matrix(
    name: str,
    rows: Tuple[AxisLabel, ...],
    cols: Tuple[AxisLabel, ...],
    lead: Optional[Tuple[AxisLabel, ...]] = None,
) -> ParamSpec:
    if lead is None:
        return ParamSpec(name, (len(rows), len(cols)), (rows, cols))
    return ParamSpec(name, (len(lead), len(rows), len(cols)), (lead, rows, cols))


def param_specs(ms: ModelStructure) -> List[ParamSpec]:
    """Parameter leaves of a structure, in layout order.

    Leaves are named ``<group>.<name>`` with groups ``x``/``y`` (process),
    ``psi`` (scheduling map), ``z``/``e`` (noise) and ``w0`` (initial state).
    """
    xl, zl = _tags("x", ms.nx), _tags("z", ms.nz)
    ul, yl = _blank(ms.nu), _blank(ms.ny)
    lead = ((),) + _tags("p", ms.n_p) if ms.is_lpv else None
    specs: List[ParamSpec] = []

    if ms.family == "nl":
        specs += ms.fx_shape.param_specs("x.f", xl + ul, xl)
        specs += ms.gx_shape.param_specs("y.g", xl + ul if ms.feedthrough else xl, yl)
    elif ms.is_lpv and ms.lpv_param == "ffn":
        out = _block_tags(xl, xl) + _block_tags(xl, ul) + _block_tags(yl, xl)
        if ms.feedthrough:
            out += _block_tags(yl, ul)
        specs += ms.plant_lpv_shape.param_specs("x.M", _tags("p", ms.n_p), out)
    else:
        specs.append(_matrix("x.A", xl, xl, lead))
        specs.append(_matrix("x.B", xl, ul, lead))
        specs.append(_matrix("y.C", yl, xl, lead))
        if ms.feedthrough:
            specs.append(_matrix("y.D", yl, ul, lead))

    if ms.family == "lpv_self" and ms.oracle_scheduling is None:
        psi_in = xl if ms.psi_inputs == "x" else xl + ul
        specs += ms.psi_shape.param_specs("psi.net", psi_in, _tags("p", ms.n_p))

    if ms.nz == 0 or ms.noise == "lti":
        specs.append(_matrix("z.A", zl, zl))
        specs.append(_matrix("z.B", zl, yl))
        specs.append(_matrix("e.C", yl, zl))
    elif ms.noise == "lpv" and ms.lpv_param == "ffn":
        out = _block_tags(zl, zl) + _block_tags(zl, yl) + _block_tags(yl, zl)
        specs += ms.noise_lpv_shape.param_specs("z.M", _tags("p", ms.n_p), out)
    elif ms.noise == "lpv":
        specs.append(_matrix("z.A", zl, zl, lead))
        specs.append(_matrix("z.B", zl, yl, lead))
        specs.append(_matrix("e.C", yl, zl, lead))
    else:
        specs += ms.fz_shape.param_specs("z.f", zl + xl + ul + yl, zl)
        specs += ms.gz_shape.param_specs("e.g", zl + xl + ul, yl)

    specs.append(ParamSpec("w0.x", (ms.nx,), (xl,)))
    specs.append(ParamSpec("w0.z", (ms.nz,), (zl,)))
    return specs


def build_layout(ms: ModelStructure) -> ParamLayout:
    return ParamLayout(param_specs(ms))


@dataclass
class StateSpaceModel:
    """A model structure together with its parameter values (theta and w0)."""

    structure: ModelStructure
    params: ParamVector

    @property
    def leaves(self) -> Dict[str, np.ndarray]:
        return self.params.layout.unflatten(self.params.values)

    @property
    def theta(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.leaves.items() if not k.startswith(W0_GROUP + ".")}

    @property
    def w0(self) -> np.ndarray:
        leaves = self.leaves
        return np.concatenate([leaves["w0.x"], leaves["w0.z"]])

    @classmethod
    def from_leaves(cls, ms: ModelStructure, leaves: Mapping[str, Any]) -> "StateSpaceModel":
        layout = build_layout(ms)
        return cls(ms, ParamVector(layout.flatten(leaves), layout))

    def with_w0(self, w0: np.ndarray) -> "StateSpaceModel":
        leaves = self.leaves
        leaves["w0.x"] = np.asarray(w0[: self.structure.nx])
        leaves["w0.z"] = np.asarray(w0[self.structure.nx :])
        return StateSpaceModel.from_leaves(self.structure, leaves)


def group_index_sets(
    ms: ModelStructure, layout: Optional[ParamLayout] = None
) -> Dict[str, np.ndarray]:
    """Group-lasso index sets per prunable state or scheduling entry.

    Process states ``x{i}`` and noise states ``z{i}`` are always prunable;
    scheduling entries ``p{i}`` only for self-scheduled structures.
    Index sets may overlap.
    """
    layout = layout or build_layout(ms)
    roles = ("x", "z", "p") if ms.family == "lpv_self" else ("x", "z")
    return {
        f"{role}{index}": idx
        for (role, index), idx in layout.label_indices().items()
        if role in roles
    }


def reduce_model(
    model: StateSpaceModel, keep: Mapping[str, Sequence[int]]
) -> StateSpaceModel:
    """Remove states/scheduling entries not listed in ``keep``.

    ``keep`` maps a role (``x``, ``z``, ``p``) to the indices that survive; a role
    that is absent keeps all of its entries.
    """
    ms = model.structure
    sizes = {"x": ms.nx, "z": ms.nz, "p": ms.n_p}
    kept = {
        role: sorted(set(keep.get(role, range(n)))) for role, n in sizes.items()
    }
    for role, idx in kept.items():
        if any(i < 0 or i >= sizes[role] for i in idx):
            raise ModelStructureError(f"Invalid {role} indices to keep: {idx}")
    if ms.family != "lpv_self" and len(kept["p"]) != ms.n_p:
        raise ModelStructureError("Scheduling entries can only be removed from lpv_self")
    remap = {role: {old: new for new, old in enumerate(idx)} for role, idx in kept.items()}

    reduced = ms.resized(len(kept["x"]), len(kept["z"]), len(kept["p"]))
    old_leaves = model.leaves
    new_leaves: Dict[str, np.ndarray] = {}
    for spec in model.params.layout:
        leaf = old_leaves[spec.name]
        masks = []
        for axis in range(len(spec.shape)):
            masks.append(
                np.array(
                    [
                        all(tag[1] in remap[tag[0]] for tag in labels)
                        for labels in spec.labels(axis)
                    ],
                    dtype=bool,
                )
            )
        if masks:
            leaf = leaf[np.ix_(*masks)] if leaf.ndim > 1 else leaf[masks[0]]
        new_leaves[spec.name] = leaf

    layout = build_layout(reduced)
    for spec in layout:
        if spec.name not in new_leaves and spec.size == 0:
            new_leaves[spec.name] = np.zeros(spec.shape)
        if spec.name not in new_leaves:
            raise ModelStructureError(f"Reduced model lacks leaf '{spec.name}'")
        if new_leaves[spec.name].shape != spec.shape:
            raise ModelStructureError(
                f"Reduced leaf '{spec.name}' has shape {new_leaves[spec.name].shape}, "
                f"expected {spec.shape}"
            )
    return StateSpaceModel.from_leaves(reduced, {s.name: new_leaves[s.name] for s in layout})
