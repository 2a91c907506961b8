"""Feedforward networks with a linear output layer and optional linear bypass."""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import jax
import jax.numpy as jnp
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pemid.core.exceptions import DimensionMismatchError
from pemid.diff.params import AxisLabel, ParamSpec

Activation = Literal["sigmoid", "swish", "tanh"]
InitScheme = Literal["normal", "xavier"]


def sigmoid(x: jax.Array) -> jax.Array:
    return jax.nn.sigmoid(x)


def swish(x: jax.Array) -> jax.Array:
    return x * jax.nn.sigmoid(x)


ACTIVATIONS: Dict[str, Callable[[jax.Array], jax.Array]] = {
    "sigmoid": sigmoid,
    "swish": swish,
    "tanh": jnp.tanh,
}


class NetSpec(BaseModel):
    """Hidden-layer widths and activations of one network, as written in configs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hidden: Tuple[int, ...] = Field(default=(), description="Hidden layer widths")
    activations: Tuple[Activation, ...] = Field(
        default=(), description="One activation per hidden layer"
    )
    bypass: bool = Field(default=False, description="Add a linear input-to-output map")
    output_bias: bool = Field(default=True, description="Bias on the output layer")

    @model_validator(mode="after")
    def check_activations(self) -> "NetSpec":
        if any(width < 1 for width in self.hidden):
            raise ValueError("Hidden layer widths must be positive")
        if len(self.activations) != len(self.hidden):
            raise ValueError(
                f"Expected {len(self.hidden)} activations, got {len(self.activations)}"
            )
        return self

    def shape(self, n_in: int, n_out: int) -> "NetShape":
        return NetShape(
            widths=(n_in, *self.hidden, n_out),
            activations=tuple(self.activations),
            bypass=self.bypass,
            output_bias=self.output_bias,
        )


@dataclass(frozen=True)
class NetShape:
    """Layer widths ``[n_in, h1, ..., n_out]`` plus activation tags."""

    widths: Tuple[int, ...]
    activations: Tuple[str, ...] = ()
    bypass: bool = False
    output_bias: bool = True

    def __post_init__(self) -> None:
        if len(self.widths) < 2:
            raise ValueError("A network needs at least input and output widths")
        if len(self.activations) != len(self.widths) - 2:
            raise ValueError(
                f"Expected {len(self.widths) - 2} activations, got {len(self.activations)}"
            )

    @property
    def n_in(self) -> int:
        return self.widths[0]

    @property
    def n_out(self) -> int:
        return self.widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def has_bias(self, layer: int) -> bool:
        return layer < self.n_layers - 1 or self.output_bias

    def param_specs(
        self,
        prefix: str,
        in_labels: Optional[Sequence[AxisLabel]] = None,
        out_labels: Optional[Sequence[AxisLabel]] = None,
    ) -> List[ParamSpec]:
        """Leaves ``{prefix}.W{i}``, ``{prefix}.b{i}`` and ``{prefix}.L`` (bypass)."""
        in_l = tuple(in_labels) if in_labels is not None else ((),) * self.n_in
        out_l = tuple(out_labels) if out_labels is not None else ((),) * self.n_out
        specs: List[ParamSpec] = []
        last = self.n_layers - 1
        for i in range(self.n_layers):
            rows, cols = self.widths[i + 1], self.widths[i]
            row_l = out_l if i == last else ((),) * rows
            col_l = in_l if i == 0 else ((),) * cols
            specs.append(ParamSpec(f"{prefix}.W{i}", (rows, cols), (row_l, col_l)))
            if self.has_bias(i):
                specs.append(ParamSpec(f"{prefix}.b{i}", (rows,), (row_l,)))
        if self.bypass:
            specs.append(ParamSpec(f"{prefix}.L", (self.n_out, self.n_in), (out_l, in_l)))
        return specs


@dataclass(frozen=True)
class FeedforwardNet:
    """A network shape with concrete weights."""

    shape: NetShape
    weights: Tuple[Any, ...]
    biases: Tuple[Any, ...]
    bypass: Optional[Any] = None

    @classmethod
    def from_params(
        cls, shape: NetShape, params: Mapping[str, Any], prefix: str
    ) -> "FeedforwardNet":
        weights = tuple(params[f"{prefix}.W{i}"] for i in range(shape.n_layers))
        biases = tuple(
            params[f"{prefix}.b{i}"]
            if shape.has_bias(i)
            else jnp.zeros(shape.widths[i + 1])
            for i in range(shape.n_layers)
        )
        bypass = params[f"{prefix}.L"] if shape.bypass else None
        return cls(shape, weights, biases, bypass)

    def to_params(self, prefix: str) -> Dict[str, np.ndarray]:
        params: Dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"{prefix}.W{i}"] = np.asarray(w)
            if self.shape.has_bias(i):
                params[f"{prefix}.b{i}"] = np.asarray(b)
        if self.shape.bypass:
            params[f"{prefix}.L"] = np.asarray(self.bypass)
        return params


def _forward(net: FeedforwardNet, x: jax.Array, n_layers: int) -> jax.Array:
    h = x
    for i in range(n_layers):
        h = h @ net.weights[i].T + net.biases[i]
        if i < net.shape.n_layers - 1:
            h = ACTIVATIONS[net.shape.activations[i]](h)
    return h


def ffn_forward(net: FeedforwardNet, x: Union[jax.Array, np.ndarray]) -> jax.Array:
    """Evaluate the network on ``x`` (last axis of size ``n_in``)."""
    x = jnp.asarray(x)
    if x.shape[-1:] != (net.shape.n_in,):
        raise DimensionMismatchError("network input", net.shape.n_in, x.shape)
    out = _forward(net, x, net.shape.n_layers)
    if net.bypass is not None:
        out = out + x @ net.bypass.T
    return out


def ffn_features(net: FeedforwardNet, x: Union[jax.Array, np.ndarray]) -> jax.Array:
    """Activations of the last hidden layer (input to the linear output layer)."""
    if net.shape.n_layers < 2:
        raise ValueError("Network has no hidden layer")
    return _forward(net, jnp.asarray(x), net.shape.n_layers - 1)


def apply_net(shape: NetShape, params: Mapping[str, Any], prefix: str, x: jax.Array) -> jax.Array:
    return ffn_forward(FeedforwardNet.from_params(shape, params, prefix), x)


def init_ffn(
    shape: NetShape,
    scheme: InitScheme = "normal",
    sigma: Optional[float] = None,
    seed: Union[int, np.random.Generator, None] = 0,
) -> FeedforwardNet:
    """Draw weights with zero biases.

    ``normal`` uses standard deviation ``sigma`` (default ``1/sqrt(fan_in)``);
    ``xavier`` uses variance ``2/(fan_in + fan_out)``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def draw(fan_out: int, fan_in: int) -> np.ndarray:
        if scheme == "xavier":
            std = np.sqrt(2.0 / (fan_in + fan_out))
        elif sigma is not None:
            std = sigma
        else:
            std = 1.0 / np.sqrt(fan_in)
        return std * rng.standard_normal((fan_out, fan_in))

    weights = tuple(
        draw(shape.widths[i + 1], shape.widths[i]) for i in range(shape.n_layers)
    )
    biases = tuple(np.zeros(shape.widths[i + 1]) for i in range(shape.n_layers))
    bypass = draw(shape.n_out, shape.n_in) if shape.bypass else None
    return FeedforwardNet(shape, weights, biases, bypass)
