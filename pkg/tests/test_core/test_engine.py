"""Tests for the experiment engine commands."""

import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd
import pytest
import yaml

from pemid.core.config import ConfigManager, ExperimentConfig
from pemid.core.engine import CommandResult, ExperimentEngine, check_dataset
from pemid.core.exceptions import DimensionMismatchError, ExperimentStageError
from pemid.core.pipeline import AUDIT_FILE_NAME
from pemid.metrics.dataset import Dataset, read_dataset, write_dataset
from pemid.models.init import init_params
from pemid.models.serialization import load_model, save_model
from pemid.models.structure import ModelStructure
from pemid.training.trainer import RunSummary

pytestmark = pytest.mark.integration


@pytest.fixture
def config(config_manager: ConfigManager, experiment_config: Dict[str, Any]) -> ExperimentConfig:
    return config_manager.build_config(experiment_config)


@pytest.fixture
def generated(engine: ExperimentEngine, config: ExperimentConfig) -> CommandResult:
    return engine.generate(config)


def _event_types(out_dir: Path) -> List[str]:
    """Event types in the order they were appended."""
    lines = (out_dir / AUDIT_FILE_NAME).read_text().splitlines()
    return [json.loads(line)["event_type"] for line in lines if line.strip()]


class TestGenerate:
    def test_writes_datasets_and_truth(self, generated: CommandResult, temp_dir: Path):
        outputs = generated.outputs

        assert generated.out_dir == temp_dir / "run"
        assert set(outputs) == {
            "resolved_config",
            "train",
            "train_truth",
            "test",
            "test_truth",
            "truth_model",
        }
        assert all(Path(path).is_file() for path in outputs.values())
        train = read_dataset(outputs["train"])
        assert train.N == 150
        assert train.name == "lti_disk_train"
        assert Path(outputs["train"]).parent == temp_dir / "run" / "data"

    def test_train_and_test_differ(self, generated: CommandResult):
        train = read_dataset(generated.outputs["train"])
        test = read_dataset(generated.outputs["test"])

        assert not (train.u == test.u).all()

    def test_is_reproducible(
        self, engine: ExperimentEngine, config: ExperimentConfig, temp_dir: Path
    ):
        first = engine.generate(config, temp_dir / "a")
        second = engine.generate(config, temp_dir / "b")

        assert (
            Path(first.outputs["train"]).read_text() == Path(second.outputs["train"]).read_text()
        )

    def test_audit_trail(self, generated: CommandResult):
        events = _event_types(generated.out_dir)

        assert events[0] == "run_start"
        assert events[-1] == "run_complete"
        assert "stage_complete" in events

    def test_truth_model_metadata(self, generated: CommandResult):
        model, metadata = load_model(generated.outputs["truth_model"])

        assert metadata["benchmark"]["name"] == "lti_disk"
        assert (model.structure.nx, model.structure.nz) == (2, 1)


class TestTrain:
    def test_train_writes_model_and_reports(
        self, engine: ExperimentEngine, config: ExperimentConfig, generated: CommandResult
    ):
        seen: List[RunSummary] = []

        result = engine.train(config, on_run=seen.append)

        for key in ("model", "train_report", "scorecards", "report"):
            assert Path(result.outputs[key]).is_file()
        assert [s.seed for s in seen] == [0, 1]
        assert result.train is not None
        assert len(result.train.report.runs) == 2

        model, metadata = load_model(result.outputs["model"])
        assert model.structure == config.model
        assert metadata["report"]["selection_score"] == result.train.report.selection_score

        cards = pd.read_csv(result.outputs["scorecards"])
        assert cards.loc[0, "label"] == "test_experiment"
        assert "pred" in Path(result.outputs["report"]).read_text()

        report = yaml.safe_load(Path(result.outputs["train_report"]).read_text())
        assert report["n_samples"] == 150

    def test_multistart_runs_are_audited(
        self, engine: ExperimentEngine, config: ExperimentConfig, generated: CommandResult
    ):
        result = engine.train(config)

        assert _event_types(result.out_dir).count("multistart_run") == 2

    def test_plant_only(
        self, engine: ExperimentEngine, config: ExperimentConfig, generated: CommandResult
    ):
        result = engine.train(config, plant_only=True)

        assert result.train is not None
        assert result.train.model.structure.nz == 0

    def test_missing_data(
        self, engine: ExperimentEngine, config: ExperimentConfig, temp_dir: Path
    ):
        with pytest.raises(ExperimentStageError) as exc_info:
            engine.train(config, out_dir=temp_dir / "empty")

        assert exc_info.value.stage == "load"

    def test_dimension_mismatch(
        self, engine: ExperimentEngine, config: ExperimentConfig, generated: CommandResult
    ):
        lpv = config.model_copy(
            update={"model": ModelStructure(family="lpv_external", nx=2, n_p=1)}
        )

        with pytest.raises(ExperimentStageError) as exc_info:
            engine.train(lpv)

        assert isinstance(exc_info.value.error, DimensionMismatchError)
        events = _event_types(generated.out_dir)
        assert events[-2:] == ["stage_error", "run_complete"]


class TestEvaluate:
    def test_scores_saved_model(
        self,
        engine: ExperimentEngine,
        config: ExperimentConfig,
        generated: CommandResult,
        temp_dir: Path,
    ):
        result = engine.evaluate(
            generated.outputs["truth_model"],
            generated.outputs["test"],
            config,
            out_dir=temp_dir / "eval",
        )

        card = result.cards[0]
        assert card.label == "truth_model"
        assert card.bfr_pred_test is not None
        assert card.bfr_sim_test is not None
        assert card.bfr_pred_test > card.bfr_sim_test
        psd = pd.read_csv(result.outputs["psd_e"])
        assert len(psd) > 1
        assert list(psd.columns) == ["freq_hz", "psd_y1"]
        assert Path(result.outputs["psd_v"]).is_file()

    def test_spectra_cover_every_output(
        self, engine: ExperimentEngine, config: ExperimentConfig, temp_dir: Path
    ):
        ms = ModelStructure(family="lti", nx=2, nz=1, ny=2, feedthrough=False)
        model_path = save_model(init_params(ms, 0), temp_dir / "two_outputs.yml")
        rng = np.random.default_rng(0)
        data = Dataset(u=rng.standard_normal((300, 1)), y=rng.standard_normal((300, 2)))
        data_path = write_dataset(data, temp_dir / "two_outputs.csv")

        result = engine.evaluate(model_path, data_path, config, out_dir=temp_dir / "eval2")

        for key in ("psd_v", "psd_e"):
            psd = pd.read_csv(result.outputs[key])
            assert list(psd.columns) == ["freq_hz", "psd_y1", "psd_y2"]
            assert (psd[["psd_y1", "psd_y2"]] > 0).all().all()


class TestSelect:
    def test_select_writes_group_norms(
        self, engine: ExperimentEngine, config: ExperimentConfig, generated: CommandResult
    ):
        sparse = config.model_copy(
            update={"training": config.training.model_copy(update={"tau_g": 1e-3})}
        )

        result = engine.select(sparse)

        assert result.selection is not None
        assert Path(result.outputs["group_norms"]).is_file()
        report = yaml.safe_load(Path(result.outputs["train_report"]).read_text())
        assert set(report["selection"]["norms_before"]) == {"x0", "x1", "z0"}
        assert result.selection.structure.nx >= 1


class TestCheckDataset:
    def test_output_mismatch(self):
        data = Dataset(u=[[0.0], [1.0]], y=[[0.0, 1.0], [1.0, 2.0]])

        with pytest.raises(DimensionMismatchError):
            check_dataset(ModelStructure(), data)
