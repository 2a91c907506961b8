"""Experiment engine that binds generators, training, selection and scoring."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
import yaml

from pemid.core.audit import AuditLogger
from pemid.core.config import ConfigManager, ExperimentConfig
from pemid.core.exceptions import DimensionMismatchError
from pemid.core.files import atomic_write_text
from pemid.core.pipeline import Pipeline, RunContext
from pemid.core.registry import BenchmarkRegistry
from pemid.metrics.dataset import Dataset, read_dataset, write_dataset, write_truth
from pemid.metrics.report import render_group_norms, render_report
from pemid.metrics.scores import ScoreCard, periodogram, write_psd, write_scorecards
from pemid.models.serialization import load_model, save_model
from pemid.models.structure import ModelStructure, StateSpaceModel
from pemid.training.selection import SelectionResult, structure_select
from pemid.training.trainer import RunSummary, Trainer, TrainResult

PSD_SEGMENT_LEN = 256


@dataclass
class CommandResult:
    """What a command produced: its run id, written files and in-memory results."""

    run_id: str
    out_dir: Path
    outputs: Dict[str, str] = field(default_factory=dict)
    cards: List[ScoreCard] = field(default_factory=list)
    train: Optional[TrainResult] = None
    selection: Optional[SelectionResult] = None


def dataset_paths(config: ExperimentConfig, data_dir: Path) -> Dict[str, Path]:
    train = data_dir / config.paths.train_file
    test = data_dir / config.paths.test_file
    return {
        "train": train,
        "train_truth": train.with_name(f"{train.stem}_truth.csv"),
        "test": test,
        "test_truth": test.with_name(f"{test.stem}_truth.csv"),
    }


def check_dataset(ms: ModelStructure, data: Dataset) -> None:
    """Raise :class:`DimensionMismatchError` if ``data`` cannot drive ``ms``."""
    if data.nu != ms.nu:
        raise DimensionMismatchError("dataset inputs", ms.nu, data.nu)
    if data.ny != ms.ny:
        raise DimensionMismatchError("dataset outputs", ms.ny, data.ny)
    if ms.needs_scheduling_data and data.n_p != ms.n_p:
        raise DimensionMismatchError("dataset scheduling channels", ms.n_p, data.n_p)


def _dump_yaml(data: Dict[str, Any], path: Path) -> Path:
    return atomic_write_text(path, yaml.safe_dump(data, sort_keys=False))


class ExperimentEngine:
    """Runs the ``generate``, ``train``, ``eval`` and ``select`` commands.

    Every command resolves its output directory, writes the resolved config
    there and appends audit events to ``<out>/audit.jsonl`` unless an explicit
    audit logger is given.
    """

    def __init__(
        self,
        audit_log_file: Optional[str] = None,
        registry: Optional[BenchmarkRegistry] = None,
        config_manager: Optional[ConfigManager] = None,
    ) -> None:
        self.config_manager = config_manager or ConfigManager()
        self.registry = registry or BenchmarkRegistry()
        audit_logger = AuditLogger(audit_log_file) if audit_log_file else None
        self.pipeline = Pipeline(self.config_manager, audit_logger)

    def load_config(
        self, config_path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None
    ) -> ExperimentConfig:
        return self.config_manager.load_experiment_config(config_path, overrides)

    def list_benchmarks(self) -> List[Dict[str, Any]]:
        return self.registry.list_benchmarks()

    def _context(
        self, command: str, config: ExperimentConfig, out_dir: Optional[Union[str, Path]]
    ) -> RunContext:
        return RunContext(command, config, config.output_dir(out_dir))

    def _read(self, config: ExperimentConfig, data_dir: Path) -> Dict[str, Dataset]:
        paths = dataset_paths(config, data_dir)
        data = {"train": read_dataset(paths["train"])}
        if paths["test"].is_file():
            data["test"] = read_dataset(paths["test"])
        return data

    # generate
    def generate(
        self,
        config: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
    ) -> CommandResult:
        """Seeded train and test datasets with truth sidecars and the truth model.

        Train and test use independent child seeds of ``benchmark.seed``.
        """
        context = self._context("generate", config, out_dir)
        bench = config.benchmark
        with self.pipeline.run(context) as logger:
            with self.pipeline.stage(context, logger, "generate", benchmark=bench.kind) as info:
                generator = self.registry.create_instance(bench)
                train_seed, test_seed = np.random.SeedSequence(bench.seed).spawn(2)
                paths = dataset_paths(config, config.data_dir(context.out_dir))
                for split, seed in (("train", train_seed), ("test", test_seed)):
                    generated = generator.generate(bench.n_samples, seed)
                    generated.dataset.name = f"{bench.kind}_{split}"
                    context.record(split, write_dataset(generated.dataset, paths[split]))
                    context.record(
                        f"{split}_truth",
                        write_truth(generated.truth, paths[f"{split}_truth"]),
                    )
                    info[f"snr_db_{split}"] = generated.snr_db
                context.record(
                    "truth_model",
                    save_model(
                        generator.true_model(),
                        context.out_dir / "truth_model.yml",
                        metadata={"benchmark": generator.get_info()},
                    ),
                )
        return CommandResult(context.run_id, context.out_dir, context.outputs)

    # train
    def train(
        self,
        config: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
        data_dir: Optional[Union[str, Path]] = None,
        plant_only: bool = False,
        on_run: Optional[Callable[[RunSummary], None]] = None,
    ) -> CommandResult:
        """Multistart training on the train set; the best run is saved with its report."""
        context = self._context("train", config, out_dir)
        ms = config.model.plant_only() if plant_only else config.model
        data_root = Path(data_dir) if data_dir else config.data_dir(context.out_dir)
        trainer = Trainer(config.training)

        with self.pipeline.run(context) as logger:
            with self.pipeline.stage(context, logger, "load", data_dir=str(data_root)) as info:
                data = self._read(config, data_root)
                for ds in data.values():
                    check_dataset(ms, ds)
                info["n_train"] = data["train"].N

            def log_run(summary: RunSummary) -> None:
                logger.log_event(
                    "multistart_run",
                    context.run_id,
                    stage="train",
                    command=context.command,
                    data=summary.model_dump(),
                    success=summary.success,
                    error_message=summary.error,
                )
                if on_run is not None:
                    on_run(summary)

            with self.pipeline.stage(
                context, logger, "train", seeds=config.training.run_seeds()
            ) as info:
                result = trainer.multistart(ms, data["train"], data.get("test"), on_run=log_run)
                info.update(
                    seed=result.report.seed,
                    final_loss=result.report.final_loss,
                    wall_time_s=result.report.wall_time_s,
                )

            with self.pipeline.stage(context, logger, "report"):
                card = trainer.score_card(
                    result.model,
                    data["train"],
                    data.get("test"),
                    label=config.name,
                    time_s=result.report.wall_time_s,
                )
                report = result.report.model_dump(mode="json")
                self._write_training_outputs(context, config, result.model, report, [card])

        return CommandResult(
            context.run_id, context.out_dir, context.outputs, cards=[card], train=result
        )

    def _write_training_outputs(
        self,
        context: RunContext,
        config: ExperimentConfig,
        model: StateSpaceModel,
        report: Dict[str, Any],
        cards: List[ScoreCard],
    ) -> None:
        out = context.out_dir
        context.record(
            "model", save_model(model, out / config.paths.model_file, metadata={"report": report})
        )
        context.record("train_report", _dump_yaml(report, out / "train_report.yml"))
        context.record("scorecards", write_scorecards(cards, out / "scorecards.csv"))
        context.record("report", atomic_write_text(out / "report.txt", render_report(cards)))

    # eval
    def evaluate(
        self,
        model_path: Union[str, Path],
        dataset_path: Union[str, Path],
        config: Optional[ExperimentConfig] = None,
        out_dir: Optional[Union[str, Path]] = None,
        label: Optional[str] = None,
    ) -> CommandResult:
        """Score a saved model on one dataset after initial-state reconstruction.

        Writes the score card, the text table and Welch periodograms of the
        estimated disturbance ``v`` and innovation ``e``.
        """
        config = config or ExperimentConfig()
        context = self._context("eval", config, out_dir)
        trainer = Trainer(config.training)

        with self.pipeline.run(context) as logger:
            with self.pipeline.stage(context, logger, "load", model=str(model_path)):
                model, _ = load_model(model_path)
                data = read_dataset(dataset_path)
                check_dataset(model.structure, data)

            with self.pipeline.stage(
                context, logger, "evaluate", dataset=str(dataset_path)
            ) as info:
                evaluation = trainer.evaluate(model, data)
                card = trainer.score_card(model, label=label or Path(model_path).stem)
                card = card.model_copy(
                    update={
                        "bfr_sim_test": evaluation.bfr_sim,
                        "bfr_pred_test": evaluation.bfr_pred,
                        "var_v": evaluation.var_v,
                        "var_e": evaluation.var_e,
                    }
                )
                info.update(bfr_sim=evaluation.bfr_sim, bfr_pred=evaluation.bfr_pred)

            with self.pipeline.stage(context, logger, "report"):
                out = context.out_dir
                context.record("scorecards", write_scorecards([card], out / "scorecards.csv"))
                context.record(
                    "report", atomic_write_text(out / "report.txt", render_report([card]))
                )
                segment = min(PSD_SEGMENT_LEN, data.N)
                residuals = {"v": evaluation.rollout.v_hat, "e": evaluation.rollout.e_pred}
                for key, series in residuals.items():
                    channels = np.asarray(series)
                    spectra = [
                        periodogram(channels[:, i], data.Ts, segment)
                        for i in range(channels.shape[1])
                    ]
                    freq = spectra[0][0]
                    psd = np.column_stack([p for _, p in spectra])
                    context.record(f"psd_{key}", write_psd(freq, psd, out / f"psd_{key}.csv"))

        return CommandResult(context.run_id, context.out_dir, context.outputs, cards=[card])

    # select
    def select(
        self,
        config: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
        data_dir: Optional[Union[str, Path]] = None,
    ) -> CommandResult:
        """Group-lasso structure selection followed by re-estimation of the pruned model."""
        context = self._context("select", config, out_dir)
        data_root = Path(data_dir) if data_dir else config.data_dir(context.out_dir)
        trainer = Trainer(config.training)
        ms = config.model

        with self.pipeline.run(context) as logger:
            with self.pipeline.stage(context, logger, "load", data_dir=str(data_root)):
                data = self._read(config, data_root)
                for ds in data.values():
                    check_dataset(ms, ds)

            with self.pipeline.stage(
                context,
                logger,
                "select",
                tau_g=config.training.tau_g,
                reweight=config.selection.reweight,
            ) as info:
                reduced, selection = structure_select(
                    ms,
                    data["train"],
                    trainer,
                    config.selection,
                    seed=config.training.run_seeds()[0],
                    data_test=data.get("test"),
                )
                info.update(
                    nx=reduced.nx,
                    nz=reduced.nz,
                    n_p=reduced.n_p,
                    pruned=selection.pruned,
                    eps_g=selection.eps_g,
                    reweight_rounds=selection.reweight_rounds,
                    rejected=selection.rejected,
                )

            with self.pipeline.stage(context, logger, "report"):
                card = trainer.score_card(
                    selection.model,
                    data["train"],
                    data.get("test"),
                    label=f"{config.name} (selected)",
                    time_s=selection.report.wall_time_s,
                )
                report = selection.report.model_dump(mode="json")
                report["selection"] = {
                    "eps_g": selection.eps_g,
                    "pruned": selection.pruned,
                    "reweight_rounds": selection.reweight_rounds,
                    "rejected": selection.rejected,
                    "norms_before": selection.norms_before,
                    "norms_after": selection.norms_after,
                }
                self._write_training_outputs(context, config, selection.model, report, [card])
                context.record(
                    "group_norms",
                    atomic_write_text(
                        context.out_dir / "group_norms.txt",
                        render_group_norms(selection.norms_before, selection.norms_after),
                    ),
                )

        return CommandResult(
            context.run_id, context.out_dir, context.outputs, cards=[card], selection=selection
        )
