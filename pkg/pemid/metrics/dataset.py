"""Datasets and their CSV persistence.

Schema: header ``k,u1..u{nu},[p1..p{np},]y1..y{ny}``, comma separated, LF line
endings, values written with 17 significant digits. The sampling period and
sizes live in a sidecar ``<stem>.meta.yml``.
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from pemid.core.exceptions import DatasetParseError, DatasetSchemaError
from pemid.core.files import atomic_write_text

FLOAT_FORMAT = "%.17g"
_COLUMN = re.compile(r"^(u|p|y)(\d+)$")
_LINE = re.compile(r"line (\d+)")


def _as_matrix(name: str, values: Any) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DatasetSchemaError(f"{name} must be a (N, n) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DatasetSchemaError(f"{name} contains NaN or Inf values")
    return arr


@dataclass
class Dataset:
    """Input/output samples ``u`` (N, nu), ``y`` (N, ny) and optional scheduling ``p`` (N, np)."""

    u: np.ndarray
    y: np.ndarray
    p: Optional[np.ndarray] = None
    Ts: float = 1.0
    name: str = ""

    def __post_init__(self) -> None:
        self.u = _as_matrix("u", self.u)
        self.y = _as_matrix("y", self.y)
        if self.p is not None:
            self.p = _as_matrix("p", self.p)
            if self.p.shape[1] == 0:
                self.p = None
        lengths = {len(self.u), len(self.y)} | ({len(self.p)} if self.p is not None else set())
        if len(lengths) != 1:
            raise DatasetSchemaError(f"Inconsistent sequence lengths: {sorted(lengths)}")
        if self.Ts <= 0:
            raise DatasetSchemaError(f"Sampling period must be positive, got {self.Ts}")

    @property
    def N(self) -> int:
        return len(self.y)

    @property
    def nu(self) -> int:
        return self.u.shape[1]

    @property
    def ny(self) -> int:
        return self.y.shape[1]

    @property
    def n_p(self) -> int:
        return 0 if self.p is None else self.p.shape[1]

    def slice(self, start: int, stop: Optional[int] = None) -> "Dataset":
        return Dataset(
            self.u[start:stop],
            self.y[start:stop],
            None if self.p is None else self.p[start:stop],
            self.Ts,
            self.name,
        )

    def split(self, fraction: float) -> Tuple["Dataset", "Dataset"]:
        """Head with ``fraction`` of the samples and the remaining tail."""
        cut = int(round(self.N * fraction))
        return self.slice(0, cut), self.slice(cut)


@dataclass
class Truth:
    """Hidden decomposition of generated outputs: ``y = y0 + v``, ``v = H e``."""

    y0: np.ndarray
    v: np.ndarray
    e: np.ndarray

    def __post_init__(self) -> None:
        self.y0 = _as_matrix("y0", self.y0)
        self.v = _as_matrix("v", self.v)
        self.e = _as_matrix("e", self.e)


def metadata_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.yml")


def _frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_dataset(ds: Dataset, path: Union[str, Path]) -> Path:
    """Write CSV and sidecar metadata; both files are written atomically."""
    path = Path(path)
    columns: Dict[str, Any] = {"k": np.arange(ds.N)}
    for name, block in (("u", ds.u), ("p", ds.p), ("y", ds.y)):
        if block is None:
            continue
        for j in range(block.shape[1]):
            columns[f"{name}{j + 1}"] = block[:, j]
    atomic_write_text(path, _frame_to_csv(pd.DataFrame(columns)))
    meta = {"name": ds.name, "Ts": float(ds.Ts), "N": ds.N, "nu": ds.nu, "ny": ds.ny, "np": ds.n_p}
    atomic_write_text(metadata_path(path), yaml.safe_dump(meta, sort_keys=True))
    return path


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise DatasetParseError(str(path), "file not found")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise DatasetParseError(str(path), "file is empty") from e
    except pd.errors.ParserError as e:
        match = _LINE.search(str(e))
        raise DatasetParseError(
            str(path), str(e), int(match.group(1)) if match else None
        ) from e

    for column in frame.columns:
        values = frame[column]
        if not pd.api.types.is_numeric_dtype(values):
            values = pd.to_numeric(values, errors="coerce")
        bad = np.flatnonzero(values.isna().to_numpy())
        if bad.size:
            # header is line 1
            line = int(bad[0]) + 2
            raise DatasetParseError(
                str(path), f"non-numeric value in column '{column}'", line
            )
    return frame


def _indexed_columns(frame: pd.DataFrame, prefix: str, path: Path, required: bool) -> List[str]:
    found = sorted(
        (int(m.group(2)), c)
        for c in frame.columns
        if (m := _COLUMN.match(c)) and m.group(1) == prefix
    )
    if required and not found:
        raise DatasetSchemaError(f"Dataset {path} has no '{prefix}' columns")
    indices = [i for i, _ in found]
    if indices != list(range(1, len(indices) + 1)):
        raise DatasetSchemaError(
            f"Dataset {path} has non-contiguous '{prefix}' columns: {[c for _, c in found]}"
        )
    return [c for _, c in found]


def read_dataset(path: Union[str, Path]) -> Dataset:
    """Read a dataset CSV (and its metadata sidecar when present).

    Raises:
        DatasetParseError: With the offending line number where known
        DatasetSchemaError: If columns do not follow the schema
    """
    path = Path(path)
    frame = _read_frame(path)
    unknown = [c for c in frame.columns if c != "k" and not _COLUMN.match(c)]
    if unknown:
        raise DatasetSchemaError(f"Dataset {path} has unknown columns: {unknown}")

    u_cols = _indexed_columns(frame, "u", path, required=True)
    p_cols = _indexed_columns(frame, "p", path, required=False)
    y_cols = _indexed_columns(frame, "y", path, required=True)

    meta: Dict[str, Any] = {}
    meta_file = metadata_path(path)
    if meta_file.is_file():
        try:
            meta = yaml.safe_load(meta_file.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise DatasetParseError(str(meta_file), str(e)) from e
        if meta.get("N", len(frame)) != len(frame):
            raise DatasetSchemaError(
                f"Dataset {path} has {len(frame)} rows, metadata says {meta['N']}"
            )

    return Dataset(
        u=frame[u_cols].to_numpy(dtype=np.float64),
        y=frame[y_cols].to_numpy(dtype=np.float64),
        p=frame[p_cols].to_numpy(dtype=np.float64) if p_cols else None,
        Ts=float(meta.get("Ts", 1.0)),
        name=str(meta.get("name", path.stem)),
    )


def write_truth(truth: Truth, path: Union[str, Path]) -> Path:
    columns: Dict[str, Any] = {"k": np.arange(len(truth.y0))}
    for name, block in (("y0_", truth.y0), ("v", truth.v), ("e", truth.e)):
        for j in range(block.shape[1]):
            columns[f"{name}{j + 1}"] = block[:, j]
    return atomic_write_text(path, _frame_to_csv(pd.DataFrame(columns)))


def read_truth(path: Union[str, Path]) -> Truth:
    path = Path(path)
    frame = _read_frame(path)

    def block(prefix: str) -> np.ndarray:
        cols = [c for c in frame.columns if re.fullmatch(rf"{prefix}\d+", c)]
        if not cols:
            raise DatasetSchemaError(f"Truth file {path} has no '{prefix}' columns")
        cols.sort(key=lambda c: int(c[len(prefix) :]))
        return frame[cols].to_numpy(dtype=np.float64)

    return Truth(y0=block("y0_"), v=block("v"), e=block("e"))
