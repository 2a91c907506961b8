"""Tests for losses, optimizers and the training protocol."""

from typing import List

import jax.numpy as jnp
import numpy as np
import pytest
from pydantic import ValidationError

from pemid.benchmarks.disk import NoiseSpec, disk_true_model, gen_lti_disk
from pemid.diff import ObjectiveHandle, ParamLayout, ParamSpec, ParamVector
from pemid.metrics.dataset import Dataset
from pemid.metrics.scores import true_baseline_scores
from pemid.models.rollout import simulation_rollout
from pemid.models.structure import ModelStructure
from pemid.training.config import AdamOptions, QnOptions, TrainConfig
from pemid.training.l1split import L1Split, split_l1
from pemid.training.losses import PemProblem, group_penalty, regularizer
from pemid.training.optimizers import adam_run, qn_run
from pemid.training.trainer import (
    ProblemCache,
    RunSummary,
    Trainer,
    reconstruct_initial_state,
)

TIGHT = QnOptions(max_iters=1000, grad_tol=1e-12, step_tol=0.0)


def rosenbrock(p):
    return (1.0 - p[0]) ** 2 + 100.0 * (p[1] - p[0] ** 2) ** 2


class TestOptimizers:
    """Adam and L-BFGS-B on known problems."""

    def test_adam_first_step(self):
        """The bias-corrected first step has length eta along -sign(gradient)."""
        obj = ObjectiveHandle(lambda p: jnp.sum(p**2), 1)
        result = adam_run(obj, np.array([1.0]), AdamOptions(iters=1, eta=0.1))

        assert result.x[0] == pytest.approx(0.9, abs=1e-7)
        assert result.x_best[0] == pytest.approx(0.9, abs=1e-7)
        assert result.f_best == pytest.approx(0.81, abs=1e-6)

    def test_adam_zero_iterations(self):
        obj = ObjectiveHandle(lambda p: jnp.sum(p**2), 2)
        result = adam_run(obj, np.array([1.0, 2.0]), AdamOptions(iters=0))

        np.testing.assert_array_equal(result.x_best, [1.0, 2.0])
        assert result.f_best == pytest.approx(5.0)

    def test_qn_quadratic(self):
        target = np.array([1.0, -2.0, 3.0])
        obj = ObjectiveHandle(lambda p: jnp.sum((p - target) ** 2), 3)

        result = qn_run(obj, np.zeros(3))

        np.testing.assert_allclose(result.x, target, atol=1e-5)
        assert result.converged
        assert not result.line_search_failed

    def test_qn_spd_quadratic(self):
        rng = np.random.default_rng(11)
        M = rng.standard_normal((20, 20))
        Q = M @ M.T / 20 + np.eye(20)
        b = rng.standard_normal(20)
        Qj, bj = jnp.asarray(Q), jnp.asarray(b)
        obj = ObjectiveHandle(lambda p: 0.5 * p @ (Qj @ p) - bj @ p, 20)

        result = qn_run(obj, np.zeros(20), options=TIGHT)

        np.testing.assert_allclose(result.x, np.linalg.solve(Q, b), atol=1e-7)

    def test_qn_rosenbrock(self):
        obj = ObjectiveHandle(rosenbrock, 2)

        result = qn_run(obj, np.array([-1.2, 1.0]), options=TIGHT)

        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-5)
        assert all(b <= a + 1e-12 for a, b in zip(result.history, result.history[1:]))

    def test_qn_respects_bounds(self):
        obj = ObjectiveHandle(lambda p: jnp.sum((p + 1.0) ** 2), 2)
        bounds = (np.zeros(2), np.full(2, np.inf))

        result = qn_run(obj, np.array([3.0, 4.0]), bounds, TIGHT)

        np.testing.assert_allclose(result.x, [0.0, 0.0], atol=1e-12)

    def test_qn_projects_start(self):
        obj = ObjectiveHandle(lambda p: jnp.sum(p**2), 1)
        bounds = (np.array([1.0]), np.array([2.0]))

        result = qn_run(obj, np.array([-5.0]), bounds, QnOptions(max_iters=0))

        np.testing.assert_array_equal(result.x, [1.0])
        assert result.iters == 0

    def test_qn_inconsistent_bounds(self):
        obj = ObjectiveHandle(lambda p: jnp.sum(p**2), 1)

        with pytest.raises(ValueError):
            qn_run(obj, np.zeros(1), (np.array([1.0]), np.array([0.0])))


class TestPenalties:
    """Regularization terms and the smooth l1 split."""

    def test_regularizer_value(self):
        cfg = TrainConfig(rho_theta=2e-4, tau=0.0, rho_w=2e-8)
        value = regularizer(np.ones(2), np.array([1.0, 0.0]), cfg)

        assert float(value) == pytest.approx(2.0001e-4, rel=1e-12)

    def test_l1_and_group_terms(self):
        cfg = TrainConfig(rho_theta=0.0, tau=0.5, rho_w=0.0, tau_g=1.0)
        theta = np.array([1.0, -2.0])

        value = regularizer(theta, np.zeros(1), cfg, groups=[np.array([3.0, 4.0])])

        assert float(value) == pytest.approx(1.5 + 5.0)

    def test_group_penalty_weights(self):
        value = group_penalty([np.array([3.0, 4.0]), np.array([1.0])], weights=[2.0, 0.5])

        assert float(value) == pytest.approx(10.5)

    def test_split_halves_are_complementary(self):
        split = L1Split(4, np.array([0, 1, 2]), np.array([3]), tau=0.1)
        values = np.array([1.5, -2.0, 0.0, 7.0])

        z = split.to_split(values)
        plus, minus, other = split.parts(z)

        assert np.all(plus * minus == 0.0)
        assert np.all(plus >= 0) and np.all(minus >= 0)
        np.testing.assert_array_equal(other, [7.0])
        np.testing.assert_array_equal(split.merge(z), values)
        assert float(split.penalty(z)) == pytest.approx(0.35)

    def test_split_param_vector(self):
        layout = ParamLayout([ParamSpec("x.A", (2,)), ParamSpec("w0.x", (1,))])
        p = ParamVector(np.array([0.5, -1.0, 3.0]), layout)

        augmented, penalty, split = split_l1(p, tau=2.0)

        assert augmented.dim == 5
        assert penalty == pytest.approx(3.0)
        np.testing.assert_array_equal(augmented.lower[:4], np.zeros(4))
        np.testing.assert_array_equal(augmented.leaf("w0.x"), [3.0])
        np.testing.assert_array_equal(split.merge(augmented.values), p.values)

    def test_split_disabled_without_l1(self):
        layout = ParamLayout([ParamSpec("x.A", (2,))])
        p = ParamVector(np.array([0.5, -1.0]), layout)

        augmented, penalty, split = split_l1(p, tau=0.0)

        assert augmented is p
        assert penalty == 0.0
        assert not split.active

    @pytest.mark.parametrize("target, expected", [(3.0, 2.0), (-3.0, -2.0), (0.5, 0.0)])
    def test_split_solves_lasso(self, target: float, expected: float):
        """min 0.5 (t - target)^2 + |t| is the soft threshold of target at 1."""
        split = L1Split(1, np.array([0]), np.zeros(0, dtype=np.int64), tau=1.0)

        def fun(z):
            plus, minus, _ = split.parts(z)
            return 0.5 * jnp.sum((plus - minus - target) ** 2) + split.penalty(z)

        obj = ObjectiveHandle(fun, split.dim)
        result = qn_run(obj, np.array([0.1, 0.1]), split.bounds(), TIGHT)

        assert split.merge(result.x)[0] == pytest.approx(expected, abs=1e-8)

    def test_split_solves_sparse_regression(self):
        """Least squares with an l1 term on ten coefficients recovers the true support."""
        rng = np.random.default_rng(0)
        N, tau = 200, 0.05
        X = rng.standard_normal((N, 10))
        theta_true = np.zeros(10)
        theta_true[[0, 3, 7]] = [2.0, -1.5, 1.0]
        y = X @ theta_true
        layout = ParamLayout([ParamSpec("x.A", (10,))])

        augmented, _, split = split_l1(ParamVector(np.zeros(10), layout), tau=tau)
        Xj, yj = jnp.asarray(X), jnp.asarray(y)

        def fun(z):
            plus, minus, _ = split.parts(z)
            r = yj - Xj @ (plus - minus)
            return 0.5 * jnp.sum(r**2) / N + split.penalty(z)

        obj = ObjectiveHandle(fun, split.dim)
        result = qn_run(obj, np.full(augmented.dim, 0.1), split.bounds(), TIGHT)
        plus, minus, _ = (np.asarray(part) for part in split.parts(result.x))
        theta = split.merge(result.x)

        assert np.max(np.minimum(plus, minus)) <= 1e-8
        np.testing.assert_array_equal(np.flatnonzero(np.abs(theta) > 1e-6), [0, 3, 7])
        np.testing.assert_allclose(theta[[0, 3, 7]], theta_true[[0, 3, 7]], atol=0.1)


class TestPemProblem:
    def test_smooth_problem_is_not_split(self, lti_data: Dataset, lti_structure: ModelStructure):
        problem = PemProblem(lti_structure, lti_data)

        handle, split = problem.split_objective(TrainConfig())

        assert not split.active
        assert handle.dim == problem.layout.size

    def test_objectives_are_cached(self, lti_data: Dataset, lti_structure: ModelStructure):
        problem = PemProblem(lti_structure, lti_data)
        cfg = TrainConfig(tau=1e-3)

        first = problem.split_objective(cfg)
        second = problem.split_objective(cfg)

        assert first[0] is second[0]
        assert first[1].active

    def test_loss_of_true_model_is_innovation_power(self):
        generated = gen_lti_disk(N=500, seed=3)
        model = disk_true_model(kind="lti")
        problem = PemProblem(model.structure, generated.dataset)

        loss = problem.loss(model.params.values)

        assert loss == pytest.approx(float(np.mean(generated.truth.e**2)), rel=1e-8)


class TestTrainConfig:
    def test_run_seeds(self):
        assert TrainConfig(seeds=[0], multistart=3).run_seeds() == [0, 1, 2]
        assert TrainConfig(seeds=[5, 2], multistart=3).run_seeds() == [5, 2, 6]
        assert TrainConfig(seeds=[4, 7], multistart=1).run_seeds() == [4]

    def test_duplicate_seeds(self):
        with pytest.raises(ValidationError):
            TrainConfig(seeds=[1, 1])

    def test_burn_in(self):
        assert TrainConfig().burn_in_for(2000) == 100
        assert TrainConfig().burn_in_for(50) == 5
        assert TrainConfig(burn_in=500).burn_in_for(100) == 100


class TestProblemCache:
    """Compiled problems kept per structure and dataset."""

    def test_same_dataset_reuses_problem(self, lti_structure: ModelStructure, lti_data: Dataset):
        cache = ProblemCache()

        assert cache.get(lti_structure, lti_data) is cache.get(lti_structure, lti_data)
        assert cache.get(lti_structure, lti_data, prefix=20).data.N == 20
        assert len(cache) == 2

    def test_evicts_least_recently_used(
        self, lti_structure: ModelStructure, oe_structure: ModelStructure, lti_data: Dataset
    ):
        cache = ProblemCache(max_entries=2)
        first = cache.get(lti_structure, lti_data)
        second = cache.get(oe_structure, lti_data)
        cache.get(lti_structure, lti_data)

        cache.get(lti_structure, lti_data, prefix=20)

        assert len(cache) == 2
        assert cache.get(lti_structure, lti_data) is first
        assert cache.get(oe_structure, lti_data) is not second

    def test_clear(self, lti_structure: ModelStructure, lti_data: Dataset):
        cache = ProblemCache()
        cache.get(lti_structure, lti_data)

        cache.clear()

        assert len(cache) == 0

    def test_needs_room_for_one_problem(self):
        with pytest.raises(ValueError):
            ProblemCache(max_entries=0)


class TestTrainer:
    """Single runs, bootstrapping and multistart."""

    def test_train_reduces_loss(
        self, lti_data: Dataset, lti_structure: ModelStructure, fast_train_config: TrainConfig
    ):
        result = Trainer(fast_train_config).train(lti_structure, lti_data, seed=0)
        report = result.report

        assert report.final_loss < report.initial_loss
        assert report.iterations["adam"] == 20
        assert 0.0 <= report.bfr_pred_train <= 1.0
        assert set(report.group_norms) == {"x0", "x1", "z0"}

    def test_train_is_deterministic(
        self, lti_data: Dataset, oe_structure: ModelStructure, fast_train_config: TrainConfig
    ):
        trainer = Trainer(fast_train_config)

        first = trainer.train(oe_structure, lti_data, seed=3)
        second = trainer.train(oe_structure, lti_data, seed=3)

        np.testing.assert_array_equal(first.model.params.values, second.model.params.values)

    def test_bootstrap_second_phase_starts_from_plant_fit(
        self, lti_data: Dataset, lti_structure: ModelStructure, fast_train_config: TrainConfig
    ):
        """The combined model starts with the plant-only loss: its noise output is zero."""
        result = Trainer(fast_train_config).bootstrap_train(lti_structure, lti_data, seed=1)
        report = result.report

        assert report.bootstrap_loss is not None
        assert report.initial_loss == pytest.approx(report.bootstrap_loss, rel=1e-10)
        assert report.final_loss <= report.initial_loss
        assert "bootstrap_qn" in report.iterations

    def test_multistart_keeps_best_run(
        self,
        lti_data: Dataset,
        lti_test_data: Dataset,
        lti_structure: ModelStructure,
        fast_train_config: TrainConfig,
    ):
        cfg = fast_train_config.model_copy(update={"multistart": 3})
        seen: List[RunSummary] = []

        result = Trainer(cfg).multistart(lti_structure, lti_data, lti_test_data, on_run=seen.append)
        report = result.report

        assert [s.seed for s in seen] == [0, 1, 2]
        assert len(report.runs) == 3
        assert report.failures == 0
        assert report.selection_score == max(s.score for s in report.runs)
        assert report.bfr_pred_test is not None

    def test_multistart_in_threads(
        self, lti_data: Dataset, oe_structure: ModelStructure, fast_train_config: TrainConfig
    ):
        serial = Trainer(fast_train_config.model_copy(update={"multistart": 2}))
        parallel = Trainer(fast_train_config.model_copy(update={"multistart": 2, "n_jobs": 2}))

        first = serial.multistart(oe_structure, lti_data)
        second = parallel.multistart(oe_structure, lti_data)

        np.testing.assert_allclose(
            first.model.params.values, second.model.params.values, atol=1e-12
        )

    def test_validation_split_selection(
        self, lti_data: Dataset, oe_structure: ModelStructure, fast_train_config: TrainConfig
    ):
        cfg = fast_train_config.model_copy(
            update={"selection_split": "validation", "validation_fraction": 0.25}
        )

        result = Trainer(cfg).multistart(oe_structure, lti_data)

        assert result.report.n_samples == 150

    def test_reconstruct_initial_state(self):
        """A noise-free record from a nonzero state gives that state back."""
        model = disk_true_model(noise=NoiseSpec(kind="white"), kind="lti")
        ms = model.structure
        x0 = np.array([0.5, -0.3])
        u = np.random.default_rng(0).standard_normal((60, 1))
        y = np.asarray(simulation_rollout(ms, model.theta, x0, u))

        w0 = reconstruct_initial_state(ms, model, Dataset(u=u, y=y), rho_w=0.0, qn=TIGHT)

        np.testing.assert_allclose(w0, x0, atol=1e-5)

    def test_evaluate_true_model(self):
        generated = gen_lti_disk(N=1000, seed=8)
        model = disk_true_model(kind="lti")
        _, true_pred = true_baseline_scores(generated.dataset, generated.truth)

        evaluation = Trainer(TrainConfig(burn_in=50)).evaluate(model, generated.dataset)

        assert evaluation.bfr_pred == pytest.approx(true_pred, abs=1e-2)
        assert evaluation.bfr_sim < evaluation.bfr_pred
        assert evaluation.w0.shape == (3,)

    def test_without_noise_model_prediction_is_simulation(
        self, lti_data: Dataset, oe_structure: ModelStructure, fast_train_config: TrainConfig
    ):
        model = Trainer(fast_train_config).train(oe_structure, lti_data).model

        evaluation = Trainer(fast_train_config).evaluate(model, lti_data)

        assert evaluation.bfr_pred == evaluation.bfr_sim

    def test_score_card(
        self, lti_data: Dataset, lti_test_data: Dataset, fast_train_config: TrainConfig
    ):
        model = disk_true_model(kind="lti")

        card = Trainer(fast_train_config).score_card(
            model, lti_data, lti_test_data, label="truth", time_s=0.0
        )

        assert (card.nx, card.nz, card.sched) == (2, 1, "-")
        assert card.bfr_pred_test is not None
        assert card.var_e is not None and card.var_e > 0
