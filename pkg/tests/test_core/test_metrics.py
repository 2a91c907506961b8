"""Tests for fit metrics, dataset files and reports."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pemid.core.exceptions import (
    DatasetParseError,
    DatasetSchemaError,
    DegenerateReferenceError,
    DimensionMismatchError,
    TooShortError,
)
from pemid.metrics import (
    Dataset,
    ScoreCard,
    Truth,
    bfr,
    format_percent,
    periodogram,
    read_dataset,
    read_truth,
    render_group_norms,
    render_report,
    sample_variance,
    write_dataset,
    write_scorecards,
    write_truth,
)
from pemid.metrics.dataset import metadata_path


class TestBfr:
    """Best fit rate."""

    def test_perfect_fit(self):
        y = np.array([0.0, 1.0, 3.0, 2.0])

        assert bfr(y, y) == 1.0

    def test_mean_prediction_scores_zero(self):
        y = np.array([0.0, 1.0, 3.0, 2.0])

        assert bfr(y, np.full(4, y.mean())) == pytest.approx(0.0, abs=1e-15)

    def test_known_value(self):
        """Offset of 0.5 on 0..3: 1 - sqrt(1/5)."""
        y = np.arange(4.0)

        assert bfr(y, y + 0.5) == pytest.approx(1.0 - np.sqrt(0.2))

    def test_affine_invariance(self):
        y = np.array([0.0, 1.0, 3.0, 2.0])
        y_hat = np.array([0.2, 0.9, 2.5, 2.1])

        assert bfr(-3.0 * y + 7.0, -3.0 * y_hat + 7.0) == pytest.approx(bfr(y, y_hat))

    def test_clipped_at_zero(self):
        y = np.arange(4.0)

        assert bfr(y, -10.0 * y) == 0.0

    def test_constant_reference(self):
        with pytest.raises(DegenerateReferenceError):
            bfr(np.ones(5), np.zeros(5))

    def test_too_short(self):
        with pytest.raises(TooShortError):
            bfr(np.ones(1), np.ones(1))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            bfr(np.arange(4.0), np.arange(5.0))

    def test_multichannel(self):
        y = np.column_stack([np.arange(4.0), np.arange(4.0) ** 2])

        assert bfr(y, y) == 1.0


class TestStatistics:
    def test_sample_variance_is_unbiased(self):
        assert sample_variance([1.0, 2.0, 3.0, 4.0]) == pytest.approx(5.0 / 3.0)

    def test_sample_variance_too_short(self):
        with pytest.raises(TooShortError):
            sample_variance([1.0])

    def test_periodogram_integrates_to_variance(self):
        """White noise: the area under the one-sided PSD is the variance."""
        x = np.random.default_rng(0).normal(scale=2.0, size=8192)
        freq, psd = periodogram(x, Ts=0.01)

        area = float(np.sum(psd) * (freq[1] - freq[0]))
        assert area == pytest.approx(np.var(x), rel=0.05)
        assert freq[-1] == pytest.approx(50.0)

    def test_periodogram_peaks_at_sinusoid_frequency(self):
        t = 0.01 * np.arange(4096)
        x = np.sin(2 * np.pi * 5.0 * t) + 0.1 * np.random.default_rng(1).standard_normal(t.size)

        freq, psd = periodogram(x, Ts=0.01, segment_len=512)

        assert freq[np.argmax(psd)] == pytest.approx(5.0, abs=0.2)
        assert np.max(psd) > 100 * np.median(psd)

    def test_periodogram_segment_too_long(self):
        with pytest.raises(TooShortError):
            periodogram(np.zeros(100), Ts=1.0, segment_len=256)

    def test_periodogram_invalid_overlap(self):
        with pytest.raises(ValueError):
            periodogram(np.zeros(512), Ts=1.0, overlap=1.0)


class TestDatasetFiles:
    """CSV persistence of datasets and hidden truth."""

    def test_write_and_read(self, temp_dir: Path):
        rng = np.random.default_rng(1)
        ds = Dataset(
            u=rng.normal(size=(30, 1)),
            y=rng.normal(size=(30, 1)),
            p=rng.uniform(size=(30, 1)),
            Ts=0.01,
            name="sample",
        )

        path = write_dataset(ds, temp_dir / "sample.csv")
        loaded = read_dataset(path)

        assert path.read_text().splitlines()[0] == "k,u1,p1,y1"
        assert metadata_path(path).is_file()
        assert loaded.Ts == 0.01
        assert loaded.name == "sample"
        np.testing.assert_array_equal(loaded.u, ds.u)
        np.testing.assert_array_equal(loaded.p, ds.p)
        np.testing.assert_array_equal(loaded.y, ds.y)

    def test_read_without_metadata(self, temp_dir: Path):
        path = temp_dir / "plain.csv"
        path.write_text("k,u1,y1\n0,1.0,2.0\n1,2.0,3.0\n")

        loaded = read_dataset(path)

        assert loaded.N == 2
        assert loaded.p is None
        assert loaded.Ts == 1.0

    def test_non_numeric_value_reports_line(self, temp_dir: Path):
        path = temp_dir / "bad.csv"
        path.write_text("k,u1,y1\n0,1.0,2.0\n1,abc,3.0\n")

        with pytest.raises(DatasetParseError) as exc_info:
            read_dataset(path)

        assert exc_info.value.line == 3
        assert "line 3" in str(exc_info.value)

    def test_missing_file(self, temp_dir: Path):
        with pytest.raises(DatasetParseError):
            read_dataset(temp_dir / "absent.csv")

    def test_missing_outputs(self, temp_dir: Path):
        path = temp_dir / "no_y.csv"
        path.write_text("k,u1\n0,1.0\n1,2.0\n")

        with pytest.raises(DatasetSchemaError):
            read_dataset(path)

    def test_non_contiguous_columns(self, temp_dir: Path):
        path = temp_dir / "gap.csv"
        path.write_text("k,u1,u3,y1\n0,1.0,2.0,3.0\n1,1.0,2.0,3.0\n")

        with pytest.raises(DatasetSchemaError):
            read_dataset(path)

    def test_unknown_column(self, temp_dir: Path):
        path = temp_dir / "extra.csv"
        path.write_text("k,u1,y1,w1\n0,1.0,2.0,3.0\n")

        with pytest.raises(DatasetSchemaError):
            read_dataset(path)

    def test_truth_file(self, temp_dir: Path):
        truth = Truth(y0=np.arange(5.0), v=np.ones(5), e=np.zeros(5))

        loaded = read_truth(write_truth(truth, temp_dir / "truth.csv"))

        np.testing.assert_array_equal(loaded.y0, truth.y0)
        np.testing.assert_array_equal(loaded.v, truth.v)


class TestDataset:
    def test_inconsistent_lengths(self):
        with pytest.raises(DatasetSchemaError):
            Dataset(u=np.zeros(5), y=np.zeros(4))

    def test_non_finite_values(self):
        with pytest.raises(DatasetSchemaError):
            Dataset(u=np.array([0.0, np.nan]), y=np.zeros(2))

    def test_split(self):
        ds = Dataset(u=np.arange(10.0), y=np.arange(10.0))
        head, tail = ds.split(0.8)

        assert (head.N, tail.N) == (8, 2)
        assert tail.u[0, 0] == 8.0


class TestReports:
    """Score cards and text tables."""

    def test_format_percent(self):
        assert format_percent(0.9512) == "95.12%"
        assert format_percent(None) == "-"

    def test_prediction_row_only_with_noise_model(self):
        cards = [
            ScoreCard(label="oe", nx=2, nz=0, bfr_sim_train=0.9, bfr_sim_test=0.85, time_s=1.5),
            ScoreCard(
                label="bj",
                nx=2,
                nz=1,
                bfr_sim_train=0.9,
                bfr_sim_test=0.88,
                bfr_pred_train=0.95,
                bfr_pred_test=0.94,
            ),
        ]

        lines = render_report(cards).splitlines()

        assert lines[0].split()[:4] == ["model", "n_x", "n_z", "sched"]
        # header, rule, one row for oe, two rows for bj
        assert len(lines) == 5
        assert "pred" in lines[4]
        assert "94.00%" in lines[4]
        assert "1.50 s" in lines[2]

    def test_text_layout_keeps_labels_verbatim(self):
        """Labels with bracketed text are not read as console markup."""
        text = render_report([ScoreCard(label="[bold]bj[/bold]", nx=2, nz=1)])
        lines = text.splitlines()

        assert "─" in lines[1]
        assert set(lines[1].strip()) <= {"─", " "}
        assert lines[2].split()[0] == "[bold]bj[/bold]"
        assert "\x1b" not in text

    def test_markdown_layout(self):
        text = render_report([ScoreCard(nx=1)], layout="markdown")

        assert text.startswith("| model |")

    def test_group_norms_mark_pruned(self):
        text = render_group_norms({"x0": 1.0, "x1": 1e-9}, {"x0": 0.8})

        assert "pruned" in text.splitlines()[-1]

    def test_write_scorecards(self, temp_dir: Path):
        path = write_scorecards([ScoreCard(label="m", nx=2, nz=1)], temp_dir / "cards.csv")
        frame = pd.read_csv(path)

        assert list(frame.columns) == list(ScoreCard.model_fields)
        assert frame.loc[0, "nz"] == 1
