"""
Tests for the scenario presets: FM demodulator, vehicle re-entry and the linear toy system.
"""

import numpy as np
import pytest

from invfilter.core.linalg import finite_difference_jacobian
from invfilter.errors import ConfigError, InvalidParameterError, SimulationAbort
from invfilter.scenarios import SCENARIOS, build_scenario
from invfilter.scenarios.fm import FM_DEFAULTS, fm_transition_matrix
from invfilter.scenarios.reentry import REENTRY_X0, RadarObservation, ReentryDynamics


class TestRegistry:
    def test_known_scenarios(self):
        """Test known scenarios."""
        assert set(SCENARIOS) == {"fm_demodulator", "reentry", "linear"}

    def test_unknown_scenario(self):
        """Test unknown scenario."""
        with pytest.raises(ConfigError, match="unknown scenario"):
            build_scenario("pendulum")

    @pytest.mark.parametrize("name", ["fm_demodulator", "reentry", "linear"])
    def test_unknown_parameter_rejected(self, name):
        """Test unknown parameter rejected."""
        with pytest.raises(ConfigError, match="unknown parameters"):
            build_scenario(name, {"not_a_parameter": 1.0})


class TestFMDemodulator:
    def test_decay(self):
        """Test decay."""
        A = fm_transition_matrix(FM_DEFAULTS["T"], FM_DEFAULTS["beta"])
        assert A[0, 0] == pytest.approx(0.996081, abs=1e-6)
        assert A[1, 0] == pytest.approx(100.0 * (A[0, 0] - 1.0))
        assert A[1, 1] == 1.0

    def test_literal_transition_entry(self):
        """Test literal transition entry."""
        model, scenario = build_scenario("fm_demodulator", {"transition_entry": "literal"})
        decay = np.exp(-FM_DEFAULTS["T"] / FM_DEFAULTS["beta"])
        np.testing.assert_allclose(model.jacobian_f(np.zeros(2))[1, 0], -100.0 * decay - 1.0)
        assert scenario.parameters["transition_entry"] == "literal"

    def test_bad_transition_entry(self):
        """Test bad transition entry."""
        with pytest.raises(ConfigError):
            build_scenario("fm_demodulator", {"transition_entry": "other"})

    def test_process_noise_is_rank_one(self, fm_setup):
        """Test process noise is rank one."""
        model, _ = fm_setup
        eigenvalues, eigenvectors = np.linalg.eigh(model.Q)
        assert eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        direction = eigenvectors[:, 1] / eigenvectors[0, 1]
        np.testing.assert_allclose(direction, [1.0, -100.0])
        assert eigenvalues[1] == pytest.approx(0.01 * (1.0 + 100.0**2))

    @pytest.mark.parametrize("theta", [-3.0, -0.4, 0.0, 1.2, 3.1])
    def test_observation_magnitude(self, fm_setup, theta):
        """Test observation magnitude."""
        model, _ = fm_setup
        assert np.linalg.norm(model.h(np.array([0.7, theta]))) == pytest.approx(np.sqrt(2.0))

    def test_defender_observes_squared_message(self, fm_setup):
        """Test defender observes squared message."""
        model, _ = fm_setup
        np.testing.assert_allclose(model.g(np.array([2.0, 1.3])), [4.0])
        np.testing.assert_allclose(model.jacobian_g(np.array([2.0, 1.3])), [[4.0, 0.0]])

    def test_observation_jacobian(self, fm_setup):
        """Test observation Jacobian."""
        model, _ = fm_setup
        x = np.array([0.4, 0.9])
        np.testing.assert_allclose(model.jacobian_h(x), finite_difference_jacobian(model.h, x), atol=1e-8)

    def test_initial_draws(self, fm_setup):
        """Test initial draws."""
        _, scenario = fm_setup
        initial = scenario.draw_initial(np.random.default_rng(3))
        np.testing.assert_array_equal(initial.xhathat0, initial.x0)
        assert -np.pi <= initial.x0[1] <= np.pi
        assert not np.array_equal(initial.x0hat, initial.x0)

    def test_published_setup(self, fm_setup):
        """Test published setup."""
        _, scenario = fm_setup
        np.testing.assert_array_equal(scenario.Sigma0, 10.0 * np.eye(2))
        np.testing.assert_array_equal(scenario.Sigma_bar0, 5.0 * np.eye(2))
        np.testing.assert_array_equal(scenario.Sigma_star0, scenario.Sigma0)
        assert scenario.horizon == 100
        assert scenario.runs == 500


class TestReentry:
    def test_initial_conditions(self):
        """Test initial conditions."""
        model, scenario = build_scenario("reentry")
        initial = scenario.draw_initial(np.random.default_rng(0))
        np.testing.assert_array_equal(initial.x0, REENTRY_X0)
        assert initial.x0hat[4] == 0.0
        np.testing.assert_array_equal(initial.x0hat[:4], REENTRY_X0[:4])
        assert np.exp(initial.x0[4]) == pytest.approx(2.0, rel=1e-3)
        assert scenario.position_indices == (0, 1)
        assert model.angle_indices == (1,)

    def test_zero_drag_zero_gravity_is_ballistic(self):
        """Test zero drag zero gravity is ballistic."""
        dynamics = ReentryDynamics(rho0=6374.0, h0=13.406, Gm0=0.0, beta0=0.0, dt=0.1, substeps=1, min_radius=1.0)
        x0 = np.array(REENTRY_X0)
        x = x0.copy()
        for k in range(1, 21):
            x = dynamics(x)
            assert x[0] == pytest.approx(x0[0] + 0.1 * k * x0[2], rel=1e-12)
            assert x[1] == pytest.approx(x0[1] + 0.1 * k * x0[3], rel=1e-12)
        np.testing.assert_allclose(x[2:], x0[2:])

    def test_substeps_converge(self):
        """Test substeps converge."""
        coarse = ReentryDynamics(6374.0, 13.406, 3.986e5, -0.59783, 0.1, 1, 1.0)
        fine = ReentryDynamics(6374.0, 13.406, 3.986e5, -0.59783, 0.1, 20, 1.0)
        x = np.array(REENTRY_X0)
        step = fine(x) - x
        np.testing.assert_allclose(coarse(x) - x, step, rtol=1e-3, atol=1e-12)

    def test_radius_floor_aborts(self):
        """Test radius floor aborts."""
        dynamics = ReentryDynamics(6374.0, 13.406, 3.986e5, -0.59783, 0.1, 1, 1.0)
        with pytest.raises(SimulationAbort) as exc_info:
            dynamics(np.array([0.5, 0.0, 0.0, 0.0, 0.0]))
        assert exc_info.value.diagnostics["radius"] == pytest.approx(0.5)

    def test_substeps_must_be_positive(self):
        """Test substeps must be positive."""
        with pytest.raises(InvalidParameterError):
            ReentryDynamics(6374.0, 13.406, 3.986e5, -0.59783, 0.1, 0, 1.0)

    def test_radar_jacobian(self):
        """Test radar Jacobian."""
        radar = RadarObservation(6374.0)
        x = np.array(REENTRY_X0)
        np.testing.assert_allclose(radar.jacobian(x), finite_difference_jacobian(radar, x), rtol=1e-5, atol=1e-9)

    def test_radar_geometry(self):
        """Test radar geometry."""
        radar = RadarObservation(6374.0)
        range_, bearing = radar(np.array([6374.0 + 3.0, 4.0, 0.0, 0.0, 0.0]))
        assert range_ == pytest.approx(5.0)
        assert bearing == pytest.approx(np.arctan2(4.0, 3.0))

    def test_noise_covariances(self):
        """Test noise covariances."""
        model, _ = build_scenario("reentry")
        np.testing.assert_allclose(np.diag(model.Q), 0.1 * np.array([0.0, 0.0, 2.4064e-5, 2.4064e-5, 1e-6]))
        np.testing.assert_allclose(np.diag(model.R), [1e-6, (0.17e-3) ** 2])
        np.testing.assert_allclose(model.g(np.array(REENTRY_X0)), REENTRY_X0[:2])


class TestLinear:
    def test_scalar_system(self, scalar_setup):
        """Test scalar system."""
        model, scenario = scalar_setup
        np.testing.assert_allclose(model.f(np.array([2.0])), [1.8])
        np.testing.assert_allclose(model.jacobian_f(np.array([2.0])), [[0.9]])
        assert (model.n_x, model.n_y, model.n_a) == (1, 1, 1)
        np.testing.assert_array_equal(scenario.Sigma0, [[1.0]])

    def test_initial_draws_centre_forward_estimate(self, linear_setup):
        """Test initial draws centre forward estimate."""
        _, scenario = linear_setup
        first = scenario.draw_initial(np.random.default_rng(5))
        second = scenario.draw_initial(np.random.default_rng(5))
        np.testing.assert_array_equal(first.x0hat, [1.0, 0.0])
        np.testing.assert_array_equal(first.x0, second.x0)
        np.testing.assert_array_equal(first.xhathat0, second.xhathat0)

    def test_dimension_check(self):
        """Test dimension check."""
        with pytest.raises(ValueError):
            build_scenario("linear", {"H": [[1.0, 0.0, 0.0]]})
