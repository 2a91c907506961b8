"""Tests for model structures, rollouts, separation and persistence."""

from pathlib import Path

import numpy as np
import pytest
import yaml
from pydantic import ValidationError

from pemid.core.exceptions import (
    MissingSchedulingError,
    ModelFileError,
    ModelFormatVersionError,
    ModelStructureError,
)
from pemid.metrics.dataset import Dataset
from pemid.models import (
    ModelStructure,
    OracleScheduling,
    StateSpaceModel,
    noise_forward_rollout,
    noise_inverse_rollout,
    plant_step,
    predictor_rollout,
    reduce_model,
    separate_system,
    simulation_rollout,
)
from pemid.models.absorb import absorb_scheduling_output
from pemid.models.init import InitOptions, init_params
from pemid.models.serialization import MODEL_FORMAT, load_model, model_to_dict, save_model


def _inputs(N: int, nu: int = 1, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((N, nu))


class TestModelStructure:
    """Structure validation."""

    def test_lpv_needs_scheduling_dimension(self):
        with pytest.raises(ValidationError):
            ModelStructure(family="lpv_external", n_p=0)

    def test_lti_takes_no_scheduling(self):
        with pytest.raises(ValidationError):
            ModelStructure(family="lti", n_p=1)

    def test_lpv_noise_needs_lpv_family(self):
        with pytest.raises(ValidationError):
            ModelStructure(family="nl", nz=1, noise="lpv")

    def test_oracle_only_for_self_scheduling(self):
        with pytest.raises(ValidationError):
            ModelStructure(
                family="lpv_external", n_p=1, oracle_scheduling=OracleScheduling(state_index=1)
            )

    def test_plant_only_drops_noise_states(self):
        ms = ModelStructure(family="lti", nx=3, nz=2)

        assert ms.plant_only().nz == 0
        assert ms.plant_only().nx == 3
        assert ms.nw == 5

    def test_missing_scheduling_signal(self):
        ms = ModelStructure(family="lpv_external", nx=2, n_p=1)
        theta = init_params(ms, 0).theta

        with pytest.raises(MissingSchedulingError):
            plant_step(ms, theta, np.zeros(2), np.zeros(1))


class TestRollouts:
    """Predictor, simulator and noise-model recursions."""

    def test_zero_noise_output_predictor_equals_simulator(self, lti_data: Dataset):
        """A freshly initialized noise model leaves the prediction equal to the simulation."""
        ms = ModelStructure(family="lti", nx=2, nz=2)
        model = init_params(ms, 4)

        result = predictor_rollout(ms, model.theta, model.w0, lti_data)
        y_sim = simulation_rollout(ms, model.theta, model.w0[: ms.nx], lti_data.u)

        np.testing.assert_allclose(result.y_pred, result.y_plant, atol=1e-12)
        np.testing.assert_allclose(result.y_plant, y_sim, atol=1e-12)

    def test_rollout_returns_terminal_state(self, lti_data: Dataset):
        ms = ModelStructure(family="lti", nx=2, nz=1)
        model = init_params(ms, 0)

        result = predictor_rollout(ms, model.theta, model.w0, lti_data)

        assert result.x.shape == (lti_data.N + 1, 2)
        assert result.z.shape == (lti_data.N + 1, 1)
        assert result.e_pred.shape == (lti_data.N, 1)

    @pytest.mark.parametrize(
        "ms",
        [
            ModelStructure(family="lti", nx=2, nz=2),
            ModelStructure(family="nl", nx=2, nz=2, noise="nl"),
        ],
        ids=["lti", "nl"],
    )
    def test_noise_forward_then_inverse_recovers_innovations(self, ms: ModelStructure):
        N = 50
        model = init_params(ms, 2, InitOptions(zero_noise_output=False))
        u = _inputs(N, seed=1)
        x = _inputs(N, nu=2, seed=2)
        e = 0.1 * _inputs(N, seed=3)
        z0 = np.zeros(ms.nz)

        v, z_forward = noise_forward_rollout(ms, model.theta, z0, x, u, e)
        e_back, z_inverse = noise_inverse_rollout(ms, model.theta, z0, x, u, v)

        np.testing.assert_allclose(e_back, e, atol=1e-12)
        np.testing.assert_allclose(z_inverse, z_forward, atol=1e-12)

    @pytest.mark.parametrize(
        "ms",
        [
            ModelStructure(family="lti", nx=2, nz=2),
            ModelStructure(family="nl", nx=2, nz=2, noise="nl"),
            ModelStructure(family="lpv_external", nx=2, nz=2, n_p=1, noise="lpv"),
            ModelStructure(family="lpv_self", nx=2, nz=2, n_p=1, noise="lpv"),
        ],
        ids=["lti", "nl", "lpv_external", "lpv_self"],
    )
    def test_noise_round_trip_over_long_records(self, ms: ModelStructure):
        """Both compositions of H and its inverse are the identity over 1000 steps."""
        N = 1000
        model = init_params(ms, 5, InitOptions(zero_noise_output=False, net_sigma=0.1))
        u = _inputs(N, seed=11)
        x = _inputs(N, nu=2, seed=12)
        p = np.random.default_rng(13).uniform(-1.0, 1.0, (N, 1))
        p = p if ms.family == "lpv_external" else None
        z0 = np.zeros(ms.nz)
        e = 0.1 * _inputs(N, seed=14)
        v = 0.1 * _inputs(N, seed=15)

        v_forward, _ = noise_forward_rollout(ms, model.theta, z0, x, u, e, p)
        e_back, _ = noise_inverse_rollout(ms, model.theta, z0, x, u, v_forward, p)
        e_inverse, _ = noise_inverse_rollout(ms, model.theta, z0, x, u, v, p)
        v_back, _ = noise_forward_rollout(ms, model.theta, z0, x, u, e_inverse, p)

        assert np.max(np.abs(np.asarray(e_back) - e)) <= 1e-10
        assert np.max(np.abs(np.asarray(v_back) - v)) <= 1e-10

    def test_noise_state_stays_zero_without_disturbance(self):
        """Output equal to the process output: zero noise state and zero residual."""
        ms = ModelStructure(family="nl", nx=2, nz=2, noise="nl")
        model = init_params(ms, 7, InitOptions(zero_noise_output=False))
        u = _inputs(80)
        y = np.asarray(simulation_rollout(ms, model.theta, np.zeros(2), u))

        result = predictor_rollout(ms, model.theta, np.zeros(ms.nw), Dataset(u=u, y=y))

        np.testing.assert_allclose(result.z, 0.0, atol=1e-12)
        np.testing.assert_allclose(result.e_pred, 0.0, atol=1e-12)

    def test_external_scheduling_rollout_needs_p(self):
        ms = ModelStructure(family="lpv_external", nx=2, n_p=1)
        model = init_params(ms, 0)
        data = Dataset(u=_inputs(10), y=_inputs(10, seed=1))

        with pytest.raises(MissingSchedulingError):
            predictor_rollout(ms, model.theta, model.w0, data)


class TestSeparation:
    """Splitting an innovation-form system into process and noise parts."""

    A = np.array([[0.8, 0.1], [-0.2, 0.7]])
    B = np.array([1.0, 0.5])
    K = np.array([0.3, -0.1])
    C = np.array([[1.0, 0.2]])

    def f_w(self, w, u, e):
        return np.tanh(self.A @ w) + self.B * u[0] + self.K * e[0] + 0.1 * w[0] * e[0]

    def g_w(self, w, u):
        return self.C @ w + 0.05 * np.sin(w[1:])

    def test_noise_maps_vanish_at_zero(self):
        system = separate_system(self.f_w, self.g_w, np.array([0.3, -0.2]))
        x, u = np.array([0.4, 1.1]), np.array([0.7])

        np.testing.assert_allclose(system.f_z(np.zeros(2), x, u, np.zeros(1)), 0.0, atol=1e-15)
        np.testing.assert_allclose(system.g_z(np.zeros(2), x, u), 0.0, atol=1e-15)
        np.testing.assert_array_equal(system.z0, np.zeros(2))

    def test_separated_output_matches_innovation_form(self):
        N = 60
        w0 = np.array([0.3, -0.2])
        u = _inputs(N, seed=4)
        e = 0.2 * _inputs(N, seed=5)

        w = w0.copy()
        y_direct = []
        for u_k, e_k in zip(u, e):
            y_direct.append(self.g_w(w, u_k) + e_k)
            w = self.f_w(w, u_k, e_k)

        y0, v, y = separate_system(self.f_w, self.g_w, w0).simulate(u, e)

        np.testing.assert_allclose(y, np.asarray(y_direct), atol=1e-12)
        np.testing.assert_allclose(y, y0 + v, atol=1e-15)

    @pytest.mark.parametrize("seed", range(20))
    def test_random_nonlinear_systems(self, seed: int):
        """Separation reproduces random innovation-form systems over 200 steps."""
        rng = np.random.default_rng(seed)
        nw, N = 3, 200
        A = rng.standard_normal((nw, nw))
        A *= 0.8 / np.linalg.norm(A, 2)
        B = rng.standard_normal(nw)
        K = 0.5 * rng.standard_normal(nw)
        C = rng.standard_normal((1, nw))
        c, d = rng.uniform(-0.2, 0.2, 2)

        def f_w(w, u, e):
            return np.tanh(A @ w) + B * u[0] + K * e[0] + c * w[0] * e[0]

        def g_w(w, u):
            return C @ w + d * np.sin(w[:1]) * u[0]

        w0 = rng.standard_normal(nw)
        u = _inputs(N, seed=100 + seed)
        e = 0.1 * _inputs(N, seed=200 + seed)

        w = w0.copy()
        y_direct = []
        for u_k, e_k in zip(u, e):
            y_direct.append(g_w(w, u_k) + e_k)
            w = f_w(w, u_k, e_k)

        system = separate_system(f_w, g_w, w0)
        y0, v, y = system.simulate(u, e)

        assert np.max(np.abs(y - np.asarray(y_direct))) <= 1e-12
        assert np.max(np.abs(y - (y0 + v))) <= 1e-12
        zero = np.zeros(nw)
        np.testing.assert_array_equal(system.f_z(zero, w0, u[0], np.zeros(1)), 0.0)
        np.testing.assert_array_equal(system.g_z(zero, w0, u[0]), 0.0)


class TestAbsorption:
    def test_absorbed_model_simulates_identically(self):
        ms = ModelStructure(
            family="lpv_self", nx=2, nz=0, n_p=2, feedthrough=True, psi_inputs="xu"
        )
        model = init_params(ms, 3)
        u = _inputs(40)
        x0 = np.array([0.1, -0.3])

        absorbed = absorb_scheduling_output(ms, model.theta)
        y_ref = simulation_rollout(ms, model.theta, x0, u)

        np.testing.assert_allclose(absorbed.simulate(x0, u), y_ref, atol=1e-10)
        # one constant term plus one slope per hidden feature of psi
        assert absorbed.leaves["x.A"].shape == (7, 2, 2)

    def test_absorption_needs_self_scheduling(self):
        ms = ModelStructure(family="lti", nx=2)

        with pytest.raises(ModelStructureError):
            absorb_scheduling_output(ms, init_params(ms, 0).theta)


class TestReduceModel:
    def test_keeps_selected_rows_and_columns(self):
        ms = ModelStructure(family="lti", nx=3, nz=2, feedthrough=False)
        model = init_params(ms, 0, InitOptions(zero_noise_output=False))
        leaves = model.leaves
        leaves["w0.x"] = np.array([1.0, 2.0, 3.0])
        model = StateSpaceModel.from_leaves(ms, leaves)

        reduced = reduce_model(model, {"x": [0, 2], "z": [1]})
        small = reduced.leaves

        assert (reduced.structure.nx, reduced.structure.nz) == (2, 1)
        np.testing.assert_array_equal(small["x.A"], leaves["x.A"][np.ix_([0, 2], [0, 2])])
        np.testing.assert_array_equal(small["x.B"], leaves["x.B"][[0, 2]])
        np.testing.assert_array_equal(small["e.C"], leaves["e.C"][:, [1]])
        np.testing.assert_array_equal(small["w0.x"], [1.0, 3.0])

    def test_invalid_index(self):
        ms = ModelStructure(family="lti", nx=2)

        with pytest.raises(ModelStructureError):
            reduce_model(init_params(ms, 0), {"x": [0, 5]})

    def test_scheduling_removal_needs_self_scheduling(self):
        ms = ModelStructure(family="lpv_external", nx=2, n_p=2)

        with pytest.raises(ModelStructureError):
            reduce_model(init_params(ms, 0), {"p": [0]})

    def test_remove_scheduling_entry(self):
        ms = ModelStructure(family="lpv_self", nx=2, n_p=2)
        model = init_params(ms, 0)

        reduced = reduce_model(model, {"p": [1]})

        assert reduced.structure.n_p == 1
        np.testing.assert_array_equal(reduced.leaves["x.A"], model.leaves["x.A"][[0, 2]])
        np.testing.assert_array_equal(
            reduced.leaves["psi.net.W2"], model.leaves["psi.net.W2"][[1]]
        )


class TestSerialization:
    def test_save_and_load(self, temp_dir: Path):
        ms = ModelStructure(family="lpv_self", nx=2, nz=1, n_p=1)
        model = init_params(ms, 1, InitOptions(zero_noise_output=False))

        path = save_model(model, temp_dir / "model.yml", metadata={"seed": 1})
        loaded, metadata = load_model(path)

        assert loaded.structure == ms
        assert metadata == {"seed": 1}
        np.testing.assert_array_equal(loaded.params.values, model.params.values)

    def test_missing_file(self, temp_dir: Path):
        with pytest.raises(ModelFileError):
            load_model(temp_dir / "absent.yml")

    def test_wrong_format(self, temp_dir: Path):
        path = temp_dir / "other.yml"
        path.write_text(yaml.safe_dump({"format": "something-else"}))

        with pytest.raises(ModelFileError):
            load_model(path)

    def test_incompatible_version(self, temp_dir: Path):
        data = model_to_dict(init_params(ModelStructure(), 0))
        data["format_version"] = "2.0"
        path = temp_dir / "future.yml"
        path.write_text(yaml.safe_dump(data))

        with pytest.raises(ModelFormatVersionError) as exc_info:
            load_model(path)

        assert "2.0" in str(exc_info.value)
        assert data["format"] == MODEL_FORMAT
