"""
Tests for the forward UKF and EKF.
"""

import numpy as np
import pytest

from invfilter.core.statespace import NonlinearStateSpaceModel, Trajectory, simulate_trajectory
from invfilter.errors import SingularInnovationError, StepFailure
from invfilter.filters.forward import (
    FilterKind,
    FilterState,
    ekf_step,
    kalman_gain,
    propagate_ukf,
    run_forward_filter,
    ukf_step,
)
from oracles import kalman_filter


def _linear_matrices(model):
    x = np.zeros(model.n_x)
    return model.jacobian_f(x), model.jacobian_h(x)


class TestLinearEquivalence:
    @pytest.mark.parametrize("kappa", [0.1, 1.0, 3.0])
    @pytest.mark.parametrize("setup_name", ["linear3_setup", "scalar_setup"])
    def test_ukf_matches_kalman_filter(self, request, setup_name, kappa):
        """Test UKF matches Kalman filter."""
        model, scenario = request.getfixturevalue(setup_name)
        A, H = _linear_matrices(model)
        trajectory = simulate_trajectory(model, scenario.draw_initial(np.random.default_rng(0)).x0, 50, seed=21)
        x0hat = np.zeros(model.n_x)

        run = run_forward_filter(model, FilterKind.UKF, x0hat, scenario.Sigma0, kappa, trajectory)
        estimates, covariances, _ = kalman_filter(A, H, model.Q, model.R, x0hat, scenario.Sigma0, trajectory.observations)

        np.testing.assert_allclose(run.estimates(), np.array(estimates), atol=1e-8)
        np.testing.assert_allclose(run.covariances(), np.array(covariances), atol=1e-6)

    def test_ekf_matches_kalman_filter(self, linear3_setup):
        """Test EKF matches Kalman filter."""
        model, scenario = linear3_setup
        A, H = _linear_matrices(model)
        trajectory = simulate_trajectory(model, [1.0, -0.5, 0.2], 50, seed=4)
        x0hat = np.array([0.5, 0.0, 0.0])

        run = run_forward_filter(model, FilterKind.EKF, x0hat, scenario.Sigma0, 1.0, trajectory)
        estimates, covariances, _ = kalman_filter(A, H, model.Q, model.R, x0hat, scenario.Sigma0, trajectory.observations)

        np.testing.assert_allclose(run.estimates(), np.array(estimates), atol=1e-8)
        np.testing.assert_allclose(run.covariances(), np.array(covariances), atol=1e-6)


class TestSteps:
    def test_step_advances_time_index(self, fm_setup):
        """Test step advances time index."""
        model, scenario = fm_setup
        state = FilterState(xhat=np.array([0.1, 0.2]), Sigma=scenario.Sigma0)
        next_state, trace = ukf_step(model, state, np.array([0.5, 1.0]), 1.0)
        assert next_state.k == 1
        assert trace.gain.shape == (2, 2)

    def test_covariances_are_symmetric_psd(self, fm_setup):
        """Test covariances are symmetric PSD."""
        model, scenario = fm_setup
        trajectory = simulate_trajectory(model, [0.3, 0.5], 30, seed=2)
        for kind in FilterKind:
            run = run_forward_filter(model, kind, [0.0, 0.0], scenario.Sigma0, 1.0, trajectory)
            for Sigma in run.covariances():
                np.testing.assert_allclose(Sigma, Sigma.T, atol=1e-12)
                assert np.linalg.eigvalsh(Sigma).min() > -1e-9

    def test_observation_dimension_checked(self, fm_setup):
        """Test observation dimension checked."""
        model, scenario = fm_setup
        state = FilterState(xhat=np.zeros(2), Sigma=scenario.Sigma0)
        with pytest.raises(ValueError):
            ekf_step(model, state, np.zeros(3))

    def test_large_measurement_noise_leaves_prediction(self, scalar_setup):
        """Test large measurement noise leaves prediction."""
        model, scenario = scalar_setup
        noisy = NonlinearStateSpaceModel(
            f=model.f, h=model.h, g=model.g, Q=model.Q, R=1e12 * np.eye(1), Sigma_eps=model.Sigma_eps,
            n_x=1, n_y=1, n_a=1,
        )
        state = FilterState(xhat=np.array([2.0]), Sigma=np.eye(1))
        next_state, trace = ukf_step(noisy, state, np.array([100.0]), 1.0)
        np.testing.assert_allclose(next_state.xhat, trace.xhat_pred, atol=1e-8)

    def test_zero_measurement_noise_and_covariance_is_singular(self, scalar_setup):
        """Test zero measurement noise and covariance is singular."""
        model, _ = scalar_setup
        degenerate = NonlinearStateSpaceModel(
            f=model.f, h=model.h, g=model.g, Q=np.zeros((1, 1)), R=np.zeros((1, 1)), Sigma_eps=model.Sigma_eps,
            n_x=1, n_y=1, n_a=1,
        )
        with pytest.raises(SingularInnovationError):
            propagate_ukf(degenerate, np.array([1.0]), np.zeros((1, 1)), 1.0)

    def test_failure_reports_step(self, scalar_setup):
        """Test failure reports step."""
        model, scenario = scalar_setup
        degenerate = NonlinearStateSpaceModel(
            f=lambda x: 0.0 * x, h=model.h, g=model.g, Q=np.zeros((1, 1)), R=np.zeros((1, 1)),
            Sigma_eps=model.Sigma_eps, n_x=1, n_y=1, n_a=1,
        )
        trajectory = simulate_trajectory(degenerate, [1.0], 3, seed=0)
        with pytest.raises(StepFailure) as exc_info:
            run_forward_filter(degenerate, FilterKind.UKF, [0.0], np.eye(1), 1.0, trajectory)
        assert exc_info.value.step == 1
        assert isinstance(exc_info.value.cause, SingularInnovationError)

    def test_kalman_gain_solves_normal_equation(self):
        """Test Kalman gain solves normal equation."""
        Sigma_y = np.array([[2.0, 0.5], [0.5, 1.0]])
        Sigma_xy = np.array([[1.0, 0.0], [0.3, 0.2], [0.0, 1.0]])
        gain = kalman_gain(Sigma_xy, Sigma_y)
        np.testing.assert_allclose(gain @ Sigma_y, Sigma_xy, atol=1e-12)

    def test_bearing_innovation_is_wrapped(self):
        """Test bearing innovation is wrapped."""
        model = NonlinearStateSpaceModel(
            f=lambda x: x, h=lambda x: x, g=lambda x: x, Q=0.01 * np.eye(1), R=0.01 * np.eye(1),
            Sigma_eps=np.eye(1), n_x=1, n_y=1, n_a=1, angle_indices=(0,),
        )
        state = FilterState(xhat=np.array([np.pi - 0.05]), Sigma=0.01 * np.eye(1))
        next_state, _ = ekf_step(model, state, np.array([-np.pi + 0.05]))
        # the measurement lies 0.1 rad ahead across the branch cut
        assert next_state.xhat[0] > np.pi - 0.05


class TestFilterProperties:
    def test_zero_horizon_returns_initial_state(self, fm_setup):
        """Test folding over an empty observation sequence leaves the initial state unchanged."""
        model, scenario = fm_setup
        empty = Trajectory(
            states=np.array([[0.2, 0.1]]),
            observations=np.empty((0, model.n_y)),
            process_noise=np.empty((0, model.n_x)),
            measurement_noise=np.empty((0, model.n_y)),
        )
        for kind in FilterKind:
            run = run_forward_filter(model, kind, [0.3, -0.4], scenario.Sigma0, 1.0, empty)
            assert len(run) == 0
            np.testing.assert_array_equal(run.estimates(), [[0.3, -0.4]])
            np.testing.assert_array_equal(run.final.Sigma, scenario.Sigma0)
            assert run.final.k == 0

    @pytest.mark.parametrize("kind", list(FilterKind))
    def test_noiseless_system_converges(self, kind):
        """Test estimates of a noiseless contraction approach the true state."""
        truth = NonlinearStateSpaceModel(
            f=lambda x: 0.9 * x, h=lambda x: x + 0.1 * x**3, g=lambda x: x, Q=np.zeros((1, 1)), R=np.zeros((1, 1)),
            Sigma_eps=np.eye(1), n_x=1, n_y=1, n_a=1,
        )
        filter_model = NonlinearStateSpaceModel(
            f=truth.f, h=truth.h, g=truth.g, Q=1e-8 * np.eye(1), R=1e-6 * np.eye(1),
            Sigma_eps=np.eye(1), n_x=1, n_y=1, n_a=1,
        )
        trajectory = simulate_trajectory(truth, [2.0], 30, seed=5)
        run = run_forward_filter(filter_model, kind, [1.0], np.eye(1), 1.0, trajectory)

        errors = np.abs(trajectory.states[:, 0] - run.estimates()[:, 0])
        assert errors[-1] < errors[0]
        assert errors[-1] < 1e-2

    def test_posterior_never_exceeds_prediction(self, fm_setup):
        """Test Σ_{k+1} ⪯ Σ_{k+1|k} at every step of both filters."""
        model, scenario = fm_setup
        trajectory = simulate_trajectory(model, [0.3, 0.5], 50, seed=8)
        for kind in FilterKind:
            run = run_forward_filter(model, kind, [0.0, 0.0], scenario.Sigma0, 1.0, trajectory)
            for state, trace in run.steps:
                assert np.linalg.eigvalsh(trace.Sigma_pred - state.Sigma).min() > -1e-9

    def test_innovations_are_white_on_linear_system(self, scalar_setup):
        """Test normalized innovations have zero mean, unit variance and no lag-one correlation."""
        model, scenario = scalar_setup
        initial = scenario.draw_initial(np.random.default_rng(12))
        trajectory = simulate_trajectory(model, initial.x0, 10_000, seed=13)
        run = run_forward_filter(model, FilterKind.EKF, initial.x0hat, scenario.Sigma0, 1.0, trajectory)

        normalized = np.array(
            [
                (trajectory.observation(k)[0] - trace.yhat_pred[0]) / np.sqrt(trace.Sigma_y[0, 0])
                for k, (_, trace) in enumerate(run.steps, start=1)
            ]
        )
        assert abs(normalized.mean()) < 0.05
        assert normalized.var() == pytest.approx(1.0, rel=0.1)
        assert abs(np.corrcoef(normalized[:-1], normalized[1:])[0, 1]) < 0.05


class TestNonFiniteGain:
    @pytest.mark.parametrize("value", [np.inf, np.nan])
    def test_non_finite_innovation_covariance(self, value):
        """Test a non-finite innovation covariance raises a package error, not a ValueError from scipy."""
        with pytest.raises(SingularInnovationError):
            kalman_gain(np.ones((1, 1)), [[value]])

    def test_non_finite_cross_covariance(self):
        """Test a non-finite cross covariance is rejected before solving."""
        with pytest.raises(SingularInnovationError):
            kalman_gain(np.array([[np.inf]]), np.eye(1))
