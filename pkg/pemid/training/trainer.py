"""Training pipelines: single run, bootstrapped run, multistart and scoring."""

import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from pemid.core.exceptions import NumericalError, TooShortError, TrainingError
from pemid.diff.params import ParamVector
from pemid.metrics.dataset import Dataset
from pemid.metrics.scores import ScoreCard, bfr, sample_variance
from pemid.models.init import init_params
from pemid.models.rollout import RolloutResult
from pemid.models.structure import ModelStructure, StateSpaceModel, build_layout
from pemid.training.config import QnOptions, TrainConfig
from pemid.training.losses import PemProblem
from pemid.training.optimizers import adam_run, qn_run

PLANT_GROUPS = ("x", "y", "psi")


class RunSummary(BaseModel):
    """Outcome of one multistart run."""

    model_config = ConfigDict(extra="forbid")

    seed: int
    success: bool
    final_loss: Optional[float] = None
    score: Optional[float] = None
    error: Optional[str] = None


class TrainReport(BaseModel):
    """What a training run did and how well the result fits."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    n_samples: int = Field(default=0, ge=0)
    initial_loss: float = Field(..., description="PEM loss at the initial parameters")
    final_loss: float = Field(..., description="PEM loss at the returned parameters")
    objective: float = Field(..., description="Loss plus regularization")
    bfr_sim_train: float = Field(..., ge=0, le=1)
    bfr_pred_train: float = Field(..., ge=0, le=1)
    bfr_sim_test: Optional[float] = Field(default=None, ge=0, le=1)
    bfr_pred_test: Optional[float] = Field(default=None, ge=0, le=1)
    var_v_test: Optional[float] = Field(default=None, ge=0)
    var_e_test: Optional[float] = Field(default=None, ge=0)
    iterations: Dict[str, int] = Field(default_factory=dict)
    wall_time_s: float = Field(default=0.0, ge=0)
    group_norms: Dict[str, float] = Field(default_factory=dict)
    converged: bool = False
    line_search_failed: bool = False
    message: str = ""
    bootstrap_loss: Optional[float] = Field(
        default=None, description="Final loss of the plant-only bootstrap phase"
    )
    selection_score: Optional[float] = None
    failures: int = Field(default=0, ge=0)
    runs: List[RunSummary] = Field(default_factory=list)


@dataclass
class TrainResult:
    model: StateSpaceModel
    report: TrainReport


@dataclass
class Evaluation:
    """Scores of a model on one dataset after initial-state reconstruction."""

    w0: np.ndarray
    rollout: RolloutResult
    bfr_sim: float
    bfr_pred: float
    var_v: float
    var_e: float


class ProblemCache:
    """Thread-safe LRU cache of :class:`PemProblem` per (structure, dataset, prefix).

    At most ``max_entries`` problems are kept; the least recently used goes first.
    """

    def __init__(self, saturation: Optional[float] = None, max_entries: int = 16) -> None:
        if max_entries < 1:
            raise ValueError(f"max_entries must be at least 1, got {max_entries}")
        self.saturation = saturation
        self.max_entries = max_entries
        self._entries: "OrderedDict[Tuple[Any, ...], Tuple[Dataset, PemProblem]]" = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def get(self, ms: ModelStructure, data: Dataset, prefix: Optional[int] = None) -> PemProblem:
        key = (ms, id(data), prefix)
        with self._lock:
            entry = self._entries.get(key)
            if entry is None or entry[0] is not data:
                sliced = data if prefix is None else data.slice(0, prefix)
                saturation = self.saturation if prefix is None else None
                entry = (data, PemProblem(ms, sliced, saturation))
                self._entries[key] = entry
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_entries:
                self._entries.popitem(last=False)
            return entry[1]


def _theta_values(
    ms: ModelStructure, theta: Union[StateSpaceModel, Mapping[str, Any]]
) -> np.ndarray:
    if isinstance(theta, StateSpaceModel):
        return theta.params.values
    layout = build_layout(ms)
    leaves = {"w0.x": np.zeros(ms.nx), "w0.z": np.zeros(ms.nz), **theta}
    return layout.flatten(leaves)


def reconstruct_initial_state(
    ms: ModelStructure,
    theta: Union[StateSpaceModel, Mapping[str, Any]],
    data_prefix: Dataset,
    rho_w: float = 2e-8,
    qn: Optional[QnOptions] = None,
    problem: Optional[PemProblem] = None,
) -> np.ndarray:
    """Initial state minimizing the prefix prediction error with theta frozen.

    Solves ``min_w0 sum_k ||e_k||^2 + (rho_w/2)||w0||^2`` over the whole of
    ``data_prefix`` with :func:`qn_run`, starting from zero.
    """
    if data_prefix.N < 1:
        raise TooShortError("initial state reconstruction", 1, data_prefix.N)
    problem = problem or PemProblem(ms, data_prefix)
    handle = problem.initial_state_objective(_theta_values(ms, theta), rho_w)
    return qn_run(handle, np.zeros(ms.nw), None, qn).x


class Trainer:
    """Runs the training protocol of one :class:`TrainConfig`.

    Compiled objectives are cached per structure and dataset, so multistart
    runs and repeated evaluations share them.
    """

    def __init__(self, cfg: Optional[TrainConfig] = None) -> None:
        self.cfg = cfg or TrainConfig()
        self.problems = ProblemCache(self.cfg.state_saturation)

    # scoring
    def evaluate(
        self,
        model: StateSpaceModel,
        data: Dataset,
        reconstruct: bool = True,
        cfg: Optional[TrainConfig] = None,
    ) -> Evaluation:
        """Sim and pred BFR on ``data``; ``w0`` is re-estimated on a burn-in prefix."""
        cfg = cfg or self.cfg
        ms = model.structure
        values = model.params.values.copy()
        w0 = model.w0
        if reconstruct:
            burn_in = cfg.burn_in_for(data.N)
            w0 = reconstruct_initial_state(
                ms,
                model,
                data,
                cfg.rho_w,
                cfg.qn,
                problem=self.problems.get(ms, data, prefix=burn_in),
            )
            values = model.with_w0(w0).params.values
        result = self.problems.get(ms, data).rollout(values)
        return Evaluation(
            w0=np.asarray(w0),
            rollout=result,
            bfr_sim=bfr(data.y, result.y_plant),
            bfr_pred=bfr(data.y, result.y_pred),
            var_v=sample_variance(result.v_hat),
            var_e=sample_variance(result.e_pred),
        )

    def _report(
        self,
        problem: PemProblem,
        model: StateSpaceModel,
        data: Dataset,
        data_test: Optional[Dataset],
        **fields: Any,
    ) -> TrainReport:
        values = model.params.values
        train_eval = self.evaluate(model, data, reconstruct=False)
        test_fields: Dict[str, Any] = {}
        if data_test is not None:
            test_eval = self.evaluate(model, data_test)
            test_fields = {
                "bfr_sim_test": test_eval.bfr_sim,
                "bfr_pred_test": test_eval.bfr_pred,
                "var_v_test": test_eval.var_v,
                "var_e_test": test_eval.var_e,
            }
        return TrainReport(
            n_samples=data.N,
            final_loss=problem.loss(values),
            bfr_sim_train=train_eval.bfr_sim,
            bfr_pred_train=train_eval.bfr_pred,
            group_norms=problem.group_norms(values),
            **test_fields,
            **fields,
        )

    # training
    def train(
        self,
        ms: ModelStructure,
        data: Dataset,
        seed: int = 0,
        init: Optional[StateSpaceModel] = None,
        data_test: Optional[Dataset] = None,
        group_weights: Optional[Mapping[str, float]] = None,
        cfg: Optional[TrainConfig] = None,
    ) -> TrainResult:
        """Adam warm start (when ``adam.iters > 0``) then L-BFGS-B on the split problem."""
        cfg = cfg or self.cfg
        model0 = init if init is not None else init_params(ms, seed, cfg.init)
        problem = self.problems.get(ms, data)
        values = model0.params.values
        initial_loss = problem.loss(values)
        iterations: Dict[str, int] = {}

        start = time.perf_counter()
        if cfg.adam.iters > 0:
            adam = adam_run(problem.objective(cfg, group_weights), values, cfg.adam)
            values = adam.x_best
            iterations["adam"] = adam.iters

        handle, split = problem.split_objective(cfg, group_weights)
        qn = qn_run(handle, split.to_split(values), split.bounds(), cfg.qn)
        values = split.merge(qn.x)
        iterations["qn"] = qn.iters
        elapsed = time.perf_counter() - start

        model = StateSpaceModel(ms, ParamVector(values, problem.layout))
        report = self._report(
            problem,
            model,
            data,
            data_test,
            seed=seed,
            initial_loss=initial_loss,
            objective=qn.fun,
            iterations=iterations,
            wall_time_s=elapsed,
            converged=qn.converged,
            line_search_failed=qn.line_search_failed,
            message=qn.message,
        )
        return TrainResult(model, report)

    def bootstrap_train(
        self,
        ms: ModelStructure,
        data: Dataset,
        seed: int = 0,
        data_test: Optional[Dataset] = None,
    ) -> TrainResult:
        """Plant-only training first, then the combined model from its plant parameters.

        Phase 2 starts from a fresh draw whose plant leaves and process initial
        state come from phase 1. Without a noise model this is plain training.
        """
        if ms.nz == 0:
            return self.train(ms, data, seed, data_test=data_test)

        phase1 = self.train(ms.plant_only(), data, seed)
        leaves = init_params(ms, seed, self.cfg.init).leaves
        for name, leaf in phase1.model.leaves.items():
            if name.split(".", 1)[0] in PLANT_GROUPS or name == "w0.x":
                leaves[name] = leaf
        combined = StateSpaceModel.from_leaves(ms, leaves)

        phase2 = self.train(ms, data, seed, init=combined, data_test=data_test)
        iterations = dict(phase2.report.iterations)
        iterations.update({f"bootstrap_{k}": v for k, v in phase1.report.iterations.items()})
        report = phase2.report.model_copy(
            update={
                "iterations": iterations,
                "wall_time_s": phase1.report.wall_time_s + phase2.report.wall_time_s,
                "bootstrap_loss": phase1.report.final_loss,
            }
        )
        return TrainResult(phase2.model, report)

    def fit(
        self,
        ms: ModelStructure,
        data: Dataset,
        seed: int = 0,
        data_test: Optional[Dataset] = None,
    ) -> TrainResult:
        if self.cfg.bootstrap:
            return self.bootstrap_train(ms, data, seed, data_test)
        return self.train(ms, data, seed, data_test=data_test)

    def _selection_data(
        self, data_train: Dataset, data_test: Optional[Dataset]
    ) -> Tuple[Dataset, Dataset]:
        split = self.cfg.selection_split
        if split == "validation":
            return data_train.split(1.0 - self.cfg.validation_fraction)
        if split == "test" and data_test is not None:
            return data_train, data_test
        return data_train, data_train

    def multistart(
        self,
        ms: ModelStructure,
        data_train: Dataset,
        data_test: Optional[Dataset] = None,
        on_run: Optional[Callable[[RunSummary], None]] = None,
    ) -> TrainResult:
        """Independent runs over ``cfg.run_seeds()``; the highest selection BFR wins.

        The selection score is the pred BFR with a noise model and the sim BFR
        without one, on the dataset named by ``selection_split``. Runs that hit
        non-finite values are recorded and skipped. Ties go to the earlier seed.
        """
        fit_data, select_data = self._selection_data(data_train, data_test)
        seeds = self.cfg.run_seeds()

        def run(seed: int) -> Tuple[RunSummary, Optional[TrainResult]]:
            try:
                result = self.fit(ms, fit_data, seed, data_test)
                evaluation = self.evaluate(
                    result.model, select_data, reconstruct=select_data is not fit_data
                )
            except NumericalError as e:
                return RunSummary(seed=seed, success=False, error=str(e)), None
            score = evaluation.bfr_pred if ms.nz > 0 else evaluation.bfr_sim
            summary = RunSummary(
                seed=seed, success=True, final_loss=result.report.final_loss, score=score
            )
            return summary, result

        if self.cfg.n_jobs == 1 or len(seeds) == 1:
            outcomes = [run(seed) for seed in seeds]
        else:
            outcomes = Parallel(n_jobs=self.cfg.n_jobs, prefer="threads")(
                delayed(run)(seed) for seed in seeds
            )

        summaries = [summary for summary, _ in outcomes]
        if on_run is not None:
            for summary in summaries:
                on_run(summary)

        best: Optional[Tuple[RunSummary, TrainResult]] = None
        for summary, result in outcomes:
            if result is None:
                continue
            if best is None or (summary.score or 0.0) > (best[0].score or 0.0):
                best = (summary, result)
        if best is None:
            raise TrainingError(
                f"All {len(seeds)} training runs failed",
                {s.seed: s.error or "" for s in summaries},
            )

        report = best[1].report.model_copy(
            update={
                "selection_score": best[0].score,
                "failures": sum(not s.success for s in summaries),
                "runs": summaries,
            }
        )
        return TrainResult(best[1].model, report)

    def score_card(
        self,
        model: StateSpaceModel,
        data_train: Optional[Dataset] = None,
        data_test: Optional[Dataset] = None,
        label: str = "",
        time_s: Optional[float] = None,
    ) -> ScoreCard:
        """Table row for a model; every dataset is scored after w0 reconstruction."""
        ms = model.structure
        sched = {"lpv_external": "external", "lpv_self": "self"}.get(ms.family, "-")
        fields: Dict[str, Any] = {}
        if data_train is not None:
            ev = self.evaluate(model, data_train)
            fields.update(bfr_sim_train=ev.bfr_sim, bfr_pred_train=ev.bfr_pred)
        if data_test is not None:
            ev = self.evaluate(model, data_test)
            fields.update(
                bfr_sim_test=ev.bfr_sim,
                bfr_pred_test=ev.bfr_pred,
                var_v=ev.var_v,
                var_e=ev.var_e,
            )
        return ScoreCard(label=label, nx=ms.nx, nz=ms.nz, sched=sched, time_s=time_s, **fields)


def train(
    ms: ModelStructure,
    data: Dataset,
    cfg: Optional[TrainConfig] = None,
    init: Optional[StateSpaceModel] = None,
    seed: int = 0,
    data_test: Optional[Dataset] = None,
) -> TrainResult:
    return Trainer(cfg).train(ms, data, seed, init=init, data_test=data_test)


def bootstrap_train(
    ms: ModelStructure,
    data: Dataset,
    cfg: Optional[TrainConfig] = None,
    seed: int = 0,
    data_test: Optional[Dataset] = None,
) -> TrainResult:
    return Trainer(cfg).bootstrap_train(ms, data, seed, data_test)


def multistart(
    ms: ModelStructure,
    data_train: Dataset,
    data_test: Optional[Dataset] = None,
    cfg: Optional[TrainConfig] = None,
) -> TrainResult:
    return Trainer(cfg).multistart(ms, data_train, data_test)
