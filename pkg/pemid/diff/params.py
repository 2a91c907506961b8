"""Named parameter leaves packed into one flat float64 vector."""

from dataclasses import dataclass
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import numpy as np

from pemid.core.exceptions import DimensionMismatchError

# Tags of one position along one axis of a leaf: (role, index) pairs with
# role "x" (process state), "z" (noise state) or "p" (scheduling entry).
AxisLabel = Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class ParamSpec:
    """Shape and per-axis state labels of one parameter leaf."""

    name: str
    shape: Tuple[int, ...]
    axis_labels: Tuple[Tuple[AxisLabel, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.axis_labels and len(self.axis_labels) != len(self.shape):
            raise DimensionMismatchError(
                f"axis labels of '{self.name}'", len(self.shape), len(self.axis_labels)
            )
        for axis, labels in enumerate(self.axis_labels):
            if len(labels) != self.shape[axis]:
                raise DimensionMismatchError(
                    f"labels on axis {axis} of '{self.name}'",
                    self.shape[axis],
                    len(labels),
                )

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    @property
    def group(self) -> str:
        """Top-level parameter group (x, y, psi, z, e or w0)."""
        return self.name.split(".", 1)[0]

    def labels(self, axis: int) -> Tuple[AxisLabel, ...]:
        if self.axis_labels:
            return self.axis_labels[axis]
        return ((),) * self.shape[axis]

    def element_labels(self) -> List[FrozenSet[Tuple[str, int]]]:
        """Union of axis tags for every element, in row-major order."""
        out: List[FrozenSet[Tuple[str, int]]] = []
        for index in np.ndindex(*self.shape):
            tags: Set[Tuple[str, int]] = set()
            for axis, position in enumerate(index):
                tags.update(self.labels(axis)[position])
            out.append(frozenset(tags))
        return out


class ParamLayout:
    """Ordered collection of parameter leaves with contiguous index ranges."""

    def __init__(self, specs: Sequence[ParamSpec]) -> None:
        self.specs: List[ParamSpec] = list(specs)
        self.slices: Dict[str, slice] = {}
        offset = 0
        for spec in self.specs:
            if spec.name in self.slices:
                raise ValueError(f"Duplicate parameter name: {spec.name}")
            self.slices[spec.name] = slice(offset, offset + spec.size)
            offset += spec.size
        self.size = offset
        self._by_name = {spec.name: spec for spec in self.specs}

    def __iter__(self) -> Iterator[ParamSpec]:
        return iter(self.specs)

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    @property
    def names(self) -> List[str]:
        return [spec.name for spec in self.specs]

    def spec(self, name: str) -> ParamSpec:
        return self._by_name[name]

    def indices(self, name: str) -> np.ndarray:
        sl = self.slices[name]
        return np.arange(sl.start, sl.stop)

    def group_indices(self, prefixes: Sequence[str]) -> np.ndarray:
        """Indices of all leaves whose top-level group is in ``prefixes``."""
        parts = [self.indices(s.name) for s in self.specs if s.group in prefixes]
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(parts)

    def complement_indices(self, prefixes: Sequence[str]) -> np.ndarray:
        parts = [self.indices(s.name) for s in self.specs if s.group not in prefixes]
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(parts)

    def label_indices(self) -> Dict[Tuple[str, int], np.ndarray]:
        """Flat indices touched by each (role, index) tag; sets may overlap."""
        found: Dict[Tuple[str, int], List[int]] = {}
        for spec in self.specs:
            start = self.slices[spec.name].start
            for offset, tags in enumerate(spec.element_labels()):
                for tag in tags:
                    found.setdefault(tag, []).append(start + offset)
        return {tag: np.asarray(idx, dtype=np.int64) for tag, idx in sorted(found.items())}

    def flatten(self, params: Mapping[str, Any]) -> np.ndarray:
        missing = [name for name in self.names if name not in params]
        if missing:
            raise DimensionMismatchError("parameter leaves", self.names, sorted(params))
        extra = [name for name in params if name not in self._by_name]
        if extra:
            raise DimensionMismatchError("parameter leaves", self.names, sorted(params))

        values = np.zeros(self.size, dtype=np.float64)
        for spec in self.specs:
            leaf = np.asarray(params[spec.name], dtype=np.float64)
            if leaf.shape != spec.shape:
                raise DimensionMismatchError(f"leaf '{spec.name}'", spec.shape, leaf.shape)
            values[self.slices[spec.name]] = leaf.reshape(-1)
        return values

    def unflatten(self, values: Any) -> Dict[str, Any]:
        """Split a flat vector into leaves; works for numpy and traced jax arrays."""
        if values.shape != (self.size,):
            raise DimensionMismatchError("parameter vector", (self.size,), values.shape)
        return {
            spec.name: values[self.slices[spec.name]].reshape(spec.shape)
            for spec in self.specs
        }


@dataclass
class ParamVector:
    """Flat parameter values with their layout and optional box bounds."""

    values: np.ndarray
    layout: ParamLayout
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.layout.size,):
            raise DimensionMismatchError(
                "parameter vector", (self.layout.size,), self.values.shape
            )
        for bound in (self.lower, self.upper):
            if bound is not None and np.shape(bound) != self.values.shape:
                raise DimensionMismatchError("bounds", self.values.shape, np.shape(bound))
        if self.lower is not None and np.any(self.values < self.lower):
            raise ValueError("parameter values violate lower bounds")
        if self.upper is not None and np.any(self.values > self.upper):
            raise ValueError("parameter values violate upper bounds")

    @property
    def groups(self) -> Dict[str, slice]:
        return dict(self.layout.slices)

    @property
    def dim(self) -> int:
        return self.layout.size

    def with_values(self, values: np.ndarray) -> "ParamVector":
        values = np.asarray(values, dtype=np.float64)
        return ParamVector(values, self.layout, self.lower, self.upper)

    def leaf(self, name: str) -> np.ndarray:
        return self.values[self.layout.slices[name]].reshape(self.layout.spec(name).shape)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = self.lower if self.lower is not None else np.full(self.dim, -np.inf)
        upper = self.upper if self.upper is not None else np.full(self.dim, np.inf)
        return lower, upper


def flatten(
    layout: ParamLayout,
    params: Mapping[str, Any],
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
) -> ParamVector:
    """Pack named leaves into a ParamVector following ``layout``."""
    return ParamVector(layout.flatten(params), layout, lower, upper)


def unflatten(p: ParamVector) -> Dict[str, np.ndarray]:
    """Inverse of :func:`flatten`."""
    return p.layout.unflatten(p.values)
