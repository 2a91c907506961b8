"""Fit metrics, residual statistics and spectral estimates."""

from pathlib import Path
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import signal as sp_signal

from pemid.core.exceptions import (
    DegenerateReferenceError,
    DimensionMismatchError,
    TooShortError,
)
from pemid.core.files import atomic_write_text
from pemid.metrics.dataset import FLOAT_FORMAT, Dataset, Truth


def _as_2d(values: Any) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def bfr(y: Any, y_hat: Any) -> float:
    """Best fit rate ``max(1 - ||y - y_hat|| / ||y - mean(y)||, 0)`` over all channels.

    Raises:
        DimensionMismatchError: If the sequences differ in shape
        TooShortError: If fewer than two samples are given
        DegenerateReferenceError: If ``y`` is constant
    """
    y, y_hat = _as_2d(y), _as_2d(y_hat)
    if y.shape != y_hat.shape:
        raise DimensionMismatchError("prediction", y.shape, y_hat.shape)
    if len(y) < 2:
        raise TooShortError("bfr", 2, len(y))
    reference = float(np.sum((y - y.mean(axis=0)) ** 2))
    if reference == 0.0:
        raise DegenerateReferenceError("Reference output is constant; BFR is undefined")
    residual = float(np.sum((y - y_hat) ** 2))
    return float(max(1.0 - np.sqrt(residual / reference), 0.0))


def sample_variance(series: Any) -> float:
    """Unbiased sample variance; multi-channel series are summed over channels."""
    arr = _as_2d(series)
    if len(arr) < 2:
        raise TooShortError("sample variance", 2, len(arr))
    return float(np.sum(np.var(arr, axis=0, ddof=1)))


def periodogram(
    series: Any,
    Ts: float,
    segment_len: int = 256,
    overlap: float = 0.5,
) -> Tuple[np.ndarray, np.ndarray]:
    """Welch-averaged one-sided PSD with a Hann window.

    Returns frequencies in Hz and PSD in units^2/Hz, so that the integral of the
    PSD approximates the sample variance.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise DimensionMismatchError("periodogram series", "(N,)", x.shape)
    if segment_len > len(x):
        raise TooShortError("periodogram", segment_len, len(x))
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    freq, psd = sp_signal.welch(
        x,
        fs=1.0 / Ts,
        window="hann",
        nperseg=segment_len,
        noverlap=int(overlap * segment_len),
        detrend="constant",
        scaling="density",
        return_onesided=True,
    )
    return freq, psd


def write_psd(freq: np.ndarray, psd: np.ndarray, path: Union[str, Path]) -> Path:
    """CSV with ``freq_hz`` and one ``psd_y<i>`` column per output channel."""
    psd = _as_2d(psd)
    columns = {"freq_hz": freq}
    columns.update({f"psd_y{i + 1}": psd[:, i] for i in range(psd.shape[1])})
    frame = pd.DataFrame(columns)
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )


class ScoreCard(BaseModel):
    """One row group of an experiment table."""

    model_config = ConfigDict(extra="forbid")

    label: str = Field(default="", description="Model label")
    nx: int = Field(..., ge=0)
    nz: int = Field(default=0, ge=0)
    sched: str = Field(default="-", description="Scheduling: -, external, self")
    bfr_sim_train: Optional[float] = Field(default=None, ge=0, le=1)
    bfr_sim_test: Optional[float] = Field(default=None, ge=0, le=1)
    bfr_pred_train: Optional[float] = Field(default=None, ge=0, le=1)
    bfr_pred_test: Optional[float] = Field(default=None, ge=0, le=1)
    var_v: Optional[float] = Field(default=None, ge=0, description="Var of v_hat")
    var_e: Optional[float] = Field(default=None, ge=0, description="Var of e_hat")
    time_s: Optional[float] = Field(default=None, ge=0, description="Training time")

    @property
    def has_prediction(self) -> bool:
        return self.nz > 0


def true_baseline_scores(ds: Dataset, truth: Truth) -> Tuple[float, float]:
    """Sim and pred BFR of the data-generating system from hidden truth.

    Simulation error is the disturbance ``v``; prediction error is ``e``.
    """
    return bfr(ds.y, truth.y0), bfr(ds.y, ds.y - truth.e)


def write_scorecards(cards: Sequence[ScoreCard], path: Union[str, Path]) -> Path:
    columns = list(ScoreCard.model_fields)
    frame = pd.DataFrame([card.model_dump() for card in cards], columns=columns)
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )

