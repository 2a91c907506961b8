"""Fit metrics, dataset persistence and experiment reports."""

from pemid.metrics.dataset import (
    Dataset,
    Truth,
    read_dataset,
    read_truth,
    write_dataset,
    write_truth,
)
from pemid.metrics.report import format_percent, render_group_norms, render_report
from pemid.metrics.scores import (
    ScoreCard,
    bfr,
    periodogram,
    sample_variance,
    true_baseline_scores,
    write_psd,
    write_scorecards,
)

__all__ = [
    "Dataset",
    "ScoreCard",
    "Truth",
    "bfr",
    "format_percent",
    "periodogram",
    "read_dataset",
    "read_truth",
    "render_group_norms",
    "render_report",
    "sample_variance",
    "true_baseline_scores",
    "write_dataset",
    "write_psd",
    "write_scorecards",
    "write_truth",
]
