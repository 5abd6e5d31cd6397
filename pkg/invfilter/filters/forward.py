"""
The adversary's estimators: forward UKF and forward EKF.

Both expose the same stepwise interface; ``propagate_ukf`` and
``propagate_ekf`` are the observation-free halves of a step (prediction,
innovation statistics and gain) so that the inverse filters can replay them.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np
from scipy import linalg

from invfilter.core.linalg import as_vector, symmetrize
from invfilter.core.statespace import NonlinearStateSpaceModel, Trajectory
from invfilter.errors import InvFilterError, SingularInnovationError, StepFailure
from invfilter.filters.unscented import cross_covariance, generate_sigma_points, propagate, unscented_moments
from invfilter.logging_config import get_logger

logger = get_logger(__name__)


class FilterKind(str, Enum):
    """Forward filter families."""

    UKF = "ukf"
    EKF = "ekf"


@dataclass(frozen=True, eq=False)
class FilterState:
    """Posterior mean x̂_k and covariance Σ_k at time k."""

    xhat: np.ndarray
    Sigma: np.ndarray
    k: int = 0


@dataclass(frozen=True, eq=False)
class ForwardStepTrace:
    """Intermediate quantities of one forward step."""

    xhat_pred: np.ndarray
    Sigma_pred: np.ndarray
    yhat_pred: np.ndarray
    Sigma_y: np.ndarray
    Sigma_xy: np.ndarray
    gain: np.ndarray


@dataclass(frozen=True, eq=False)
class ForwardRun:
    """Result of folding a forward filter over a trajectory."""

    kind: FilterKind
    initial: FilterState
    steps: List[Tuple[FilterState, ForwardStepTrace]]

    def __len__(self) -> int:
        return len(self.steps)

    def estimates(self) -> np.ndarray:
        """x̂_0..x̂_K stacked as rows."""
        return np.array([self.initial.xhat] + [state.xhat for state, _ in self.steps])

    def covariances(self) -> np.ndarray:
        return np.array([self.initial.Sigma] + [state.Sigma for state, _ in self.steps])

    @property
    def final(self) -> FilterState:
        return self.steps[-1][0] if self.steps else self.initial


def kalman_gain(Sigma_xy: np.ndarray, Sigma_y: np.ndarray) -> np.ndarray:
    """
    Solve K Σ^y = Σ^{xy} on the symmetrised innovation covariance.

    Raises:
        SingularInnovationError: Σ^y is not positive definite or either input is not finite
    """
    Sigma_xy = np.atleast_2d(np.asarray(Sigma_xy, dtype=float))
    Sigma_y = symmetrize(np.atleast_2d(np.asarray(Sigma_y, dtype=float)))
    if not (np.all(np.isfinite(Sigma_y)) and np.all(np.isfinite(Sigma_xy))):
        raise SingularInnovationError("innovation covariance or cross covariance is not finite", matrix=Sigma_y)
    try:
        factor = linalg.cho_factor(Sigma_y, lower=True)
    except linalg.LinAlgError as e:
        raise SingularInnovationError(f"innovation covariance is not positive definite: {e}", matrix=Sigma_y)
    return linalg.cho_solve(factor, Sigma_xy.T).T


def propagate_ukf(model: NonlinearStateSpaceModel, xhat, Sigma, kappa: float) -> ForwardStepTrace:
    """
    Observation-free part of a UKF step from (x̂_k, Σ_k).

    Time update through f with +Q, then sigma points regenerated from the
    predicted pair and pushed through h with +R, then the gain.
    """
    time_set = generate_sigma_points(xhat, Sigma, kappa)
    s_star = propagate(time_set, model.f)
    xhat_pred, Sigma_pred = unscented_moments(time_set, s_star, model.Q)

    meas_set = generate_sigma_points(xhat_pred, Sigma_pred, kappa)
    q_star = propagate(meas_set, model.h)
    yhat_pred, Sigma_y = unscented_moments(meas_set, q_star, model.R)
    Sigma_xy = cross_covariance(meas_set, meas_set.points, q_star, xhat_pred, yhat_pred)

    gain = kalman_gain(Sigma_xy, Sigma_y)
    return ForwardStepTrace(
        xhat_pred=xhat_pred,
        Sigma_pred=Sigma_pred,
        yhat_pred=yhat_pred,
        Sigma_y=Sigma_y,
        Sigma_xy=Sigma_xy,
        gain=gain,
    )


def propagate_ekf(model: NonlinearStateSpaceModel, xhat, Sigma) -> ForwardStepTrace:
    """Observation-free part of an EKF step from (x̂_k, Σ_k)."""
    xhat = np.asarray(xhat, dtype=float)
    F = model.jacobian_f(xhat)
    xhat_pred = np.atleast_1d(model.f(xhat)).astype(float)
    Sigma_pred = symmetrize(F @ Sigma @ F.T + model.Q)

    H = model.jacobian_h(xhat_pred)
    yhat_pred = np.atleast_1d(model.h(xhat_pred)).astype(float)
    Sigma_y = symmetrize(H @ Sigma_pred @ H.T + model.R)
    Sigma_xy = Sigma_pred @ H.T

    gain = kalman_gain(Sigma_xy, Sigma_y)
    return ForwardStepTrace(
        xhat_pred=xhat_pred,
        Sigma_pred=Sigma_pred,
        yhat_pred=yhat_pred,
        Sigma_y=Sigma_y,
        Sigma_xy=Sigma_xy,
        gain=gain,
    )


def posterior_covariance(trace: ForwardStepTrace) -> np.ndarray:
    """Σ_{k+1} = Σ_{k+1|k} − K Σ^y Kᵀ."""
    return symmetrize(trace.Sigma_pred - trace.gain @ trace.Sigma_y @ trace.gain.T)


def _update(model: NonlinearStateSpaceModel, state: FilterState, trace: ForwardStepTrace, y_next) -> FilterState:
    y_next = as_vector(y_next, model.n_y, "y_next")
    xhat = trace.xhat_pred + trace.gain @ model.innovation(y_next, trace.yhat_pred)
    return FilterState(xhat=xhat, Sigma=posterior_covariance(trace), k=state.k + 1)


def ukf_step(
    model: NonlinearStateSpaceModel,
    state: FilterState,
    y_next,
    kappa: float,
) -> Tuple[FilterState, ForwardStepTrace]:
    """
    One forward UKF step.

    Args:
        model: System model
        state: (x̂_k, Σ_k)
        y_next: Observation y_{k+1}
        kappa: Sigma-point scaling, n_x + κ > 0

    Returns:
        (posterior state at k + 1, step trace)
    """
    xhat = as_vector(state.xhat, model.n_x, "xhat")
    trace = propagate_ukf(model, xhat, state.Sigma, kappa)
    return _update(model, state, trace, y_next), trace


def ekf_step(
    model: NonlinearStateSpaceModel,
    state: FilterState,
    y_next,
) -> Tuple[FilterState, ForwardStepTrace]:
    """One forward EKF step (Jacobians analytic when supplied, otherwise central differences)."""
    xhat = as_vector(state.xhat, model.n_x, "xhat")
    trace = propagate_ekf(model, xhat, state.Sigma)
    return _update(model, state, trace, y_next), trace


def forward_step(
    model: NonlinearStateSpaceModel,
    kind: FilterKind,
    state: FilterState,
    y_next,
    kappa: float,
) -> Tuple[FilterState, ForwardStepTrace]:
    if FilterKind(kind) is FilterKind.UKF:
        return ukf_step(model, state, y_next, kappa)
    return ekf_step(model, state, y_next)


def run_forward_filter(
    model: NonlinearStateSpaceModel,
    filter_kind: FilterKind,
    x0hat,
    Sigma0,
    kappa: float,
    trajectory: Trajectory,
) -> ForwardRun:
    """
    Fold a forward filter over y_1..y_K.

    Raises:
        StepFailure: a step failed; carries the failing time index
    """
    kind = FilterKind(filter_kind)
    initial = FilterState(
        xhat=as_vector(x0hat, model.n_x, "x0hat"),
        Sigma=symmetrize(np.atleast_2d(np.asarray(Sigma0, dtype=float))),
        k=0,
    )
    steps: List[Tuple[FilterState, ForwardStepTrace]] = []
    state = initial
    for k in range(1, trajectory.horizon + 1):
        try:
            state, trace = forward_step(model, kind, state, trajectory.observation(k), kappa)
        except InvFilterError as e:
            logger.warning("Forward filter step failed", filter=kind.value, step=k, error_message=str(e))
            raise StepFailure(k, e, filter_name=f"forward {kind.value}") from e
        steps.append((state, trace))
    return ForwardRun(kind=kind, initial=initial, steps=steps)
