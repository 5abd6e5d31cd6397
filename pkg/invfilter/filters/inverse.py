"""
The defender's estimators of the adversary's estimate.

The adversary's whole forward step is a deterministic map of its previous
estimate, its covariance, the true next state and the adversary's
measurement noise:

    x̂_{k+1} = f̃(x̂_k, Σ_k, x_{k+1}, v_{k+1})

The defender filters this transition with either an augmented-state UKF
(noise folded into the sigma points) or an EKF, observing a_k = g(x̂_k) + ε_k.
The adversary's covariance Σ_k is not observable; the defender replicates
its recursion at its own estimates (Σ*) and feeds it to f̃ as a known input.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np

from invfilter.core.linalg import as_vector, finite_difference_jacobian, symmetrize
from invfilter.core.statespace import NonlinearStateSpaceModel, Trajectory
from invfilter.errors import DimensionMismatchError, InvFilterError, StepFailure
from invfilter.filters.forward import (
    FilterKind,
    ForwardStepTrace,
    kalman_gain,
    posterior_covariance,
    propagate_ekf,
    propagate_ukf,
)
from invfilter.filters.unscented import cross_covariance, generate_sigma_points, unscented_moments
from invfilter.logging_config import get_logger

logger = get_logger(__name__)

# Central-difference step scale for the Jacobian of f̃
FTILDE_JACOBIAN_STEP = 1e-5


class SigmaStarAnchor(str, Enum):
    """Estimate at which Σ* is advanced: x̂̂_k (previous) or x̂̂_{k+1} (current)."""

    PREVIOUS = "previous"
    CURRENT = "current"


@dataclass(frozen=True, eq=False)
class InverseFilterState:
    """Defender's estimate x̂̂_k, its covariance Σ̄_k and the replicated forward covariance Σ*_k."""

    xhathat: np.ndarray
    Sigma_bar: np.ndarray
    Sigma_star: np.ndarray
    k: int = 0


@dataclass(frozen=True, eq=False)
class AugmentedState:
    """ẑ_k = [x̂̂_kᵀ, 0ᵀ]ᵀ with block-diagonal covariance diag(Σ̄_k, R)."""

    zhat: np.ndarray
    Sigma_z: np.ndarray

    @classmethod
    def from_state(cls, state: InverseFilterState, R: np.ndarray) -> "AugmentedState":
        n_x = state.xhathat.shape[0]
        n_y = R.shape[0]
        zhat = np.concatenate([state.xhathat, np.zeros(n_y)])
        Sigma_z = np.zeros((n_x + n_y, n_x + n_y))
        Sigma_z[:n_x, :n_x] = state.Sigma_bar
        Sigma_z[n_x:, n_x:] = R
        return cls(zhat=zhat, Sigma_z=Sigma_z)

    @property
    def n_z(self) -> int:
        return self.zhat.shape[0]


@dataclass(frozen=True, eq=False)
class InverseStepTrace:
    """Intermediate quantities of one inverse step."""

    xhathat_pred: np.ndarray
    Sigma_bar_pred: np.ndarray
    ahat_pred: np.ndarray
    Sigma_a: np.ndarray
    Sigma_xa: np.ndarray
    gain: np.ndarray
    # Replicated forward step at (x̂̂_k, Σ*_k)
    forward: ForwardStepTrace
    sigma_points: int = 0


@dataclass(frozen=True, eq=False)
class InverseRun:
    """Result of folding an inverse filter over a trajectory."""

    kind: FilterKind
    assumed_forward: FilterKind
    initial: InverseFilterState
    states: List[InverseFilterState]
    traces: List[InverseStepTrace]
    errors: np.ndarray  # x̂_k − x̂̂_k for k = 0..K

    def estimates(self) -> np.ndarray:
        return np.array([self.initial.xhathat] + [state.xhathat for state in self.states])

    def covariances(self) -> np.ndarray:
        return np.array([self.initial.Sigma_bar] + [state.Sigma_bar for state in self.states])

    @property
    def final(self) -> InverseFilterState:
        return self.states[-1] if self.states else self.initial


# Forward replay ---------------------------------------------------------------


def forward_pass(
    model: NonlinearStateSpaceModel,
    assumed_forward: FilterKind,
    xhat: np.ndarray,
    Sigma: np.ndarray,
    kappa_fwd: float,
) -> ForwardStepTrace:
    """The assumed forward filter's prediction, innovation statistics and gain from (x̂, Σ)."""
    if FilterKind(assumed_forward) is FilterKind.UKF:
        return propagate_ukf(model, xhat, Sigma, kappa_fwd)
    return propagate_ekf(model, xhat, Sigma)


def replay_update(model: NonlinearStateSpaceModel, trace: ForwardStepTrace, x_next: np.ndarray, v) -> np.ndarray:
    """x̂_{k+1|k} + K (h(x_{k+1}) + v − ŷ_{k+1|k})."""
    y_replayed = np.atleast_1d(model.h(x_next)) + v
    return trace.xhat_pred + trace.gain @ model.innovation(y_replayed, trace.yhat_pred)


def evaluate_ftilde(
    model: NonlinearStateSpaceModel,
    xhat,
    Sigma,
    x_next,
    v,
    kappa_fwd: float,
) -> np.ndarray:
    """
    One full forward-UKF step expressed as a function.

    Equals Σᵢ ωᵢ (s*ᵢ − K q*ᵢ) + K h(x_{k+1}) + K v; the gain is recomputed from
    (x̂, Σ) on every call.

    Args:
        model: System model
        xhat: Adversary estimate x̂_k
        Sigma: Adversary covariance Σ_k (or its replica Σ*_k)
        x_next: True state x_{k+1}
        v: Adversary measurement noise v_{k+1}
        kappa_fwd: The adversary's κ as assumed by the defender
    """
    xhat = as_vector(xhat, model.n_x, "xhat")
    trace = propagate_ukf(model, xhat, Sigma, kappa_fwd)
    return replay_update(model, trace, as_vector(x_next, model.n_x, "x_next"), as_vector(v, model.n_y, "v"))


def evaluate_ftilde_ekf(model: NonlinearStateSpaceModel, xhat, Sigma, x_next, v) -> np.ndarray:
    """EKF counterpart of f̃: f(x̂) + K (h(x_{k+1}) + v − h(f(x̂))) with K from the Jacobians at x̂."""
    xhat = as_vector(xhat, model.n_x, "xhat")
    trace = propagate_ekf(model, xhat, Sigma)
    return replay_update(model, trace, as_vector(x_next, model.n_x, "x_next"), as_vector(v, model.n_y, "v"))


def transition(
    model: NonlinearStateSpaceModel,
    assumed_forward: FilterKind,
    xhat,
    Sigma,
    x_next,
    v,
    kappa_fwd: float,
) -> np.ndarray:
    if FilterKind(assumed_forward) is FilterKind.UKF:
        return evaluate_ftilde(model, xhat, Sigma, x_next, v, kappa_fwd)
    return evaluate_ftilde_ekf(model, xhat, Sigma, x_next, v)


def ftilde_jacobian(
    model: NonlinearStateSpaceModel,
    assumed_forward: FilterKind,
    xhathat: np.ndarray,
    Sigma_star: np.ndarray,
    x_next: np.ndarray,
    kappa_fwd: float,
    step_scale: float = FTILDE_JACOBIAN_STEP,
) -> np.ndarray:
    """Central-difference Jacobian of f̃ with respect to the estimate, at zero noise."""
    zero_noise = np.zeros(model.n_y)

    def f_tilde(x):
        return transition(model, assumed_forward, x, Sigma_star, x_next, zero_noise, kappa_fwd)

    return finite_difference_jacobian(f_tilde, np.asarray(xhathat, dtype=float), step_scale=step_scale)


def update_sigma_star(
    model: NonlinearStateSpaceModel,
    estimate,
    Sigma_star,
    kappa_fwd: float,
    assumed_forward: FilterKind = FilterKind.UKF,
) -> np.ndarray:
    """
    Advance the replicated forward covariance: Σ*_{k+1} from (estimate, Σ*_k).

    Runs the covariance part of the assumed forward filter's step; no
    observation is consumed.
    """
    estimate = as_vector(estimate, model.n_x, "estimate")
    return posterior_covariance(forward_pass(model, assumed_forward, estimate, Sigma_star, kappa_fwd))


def _advance_sigma_star(
    model: NonlinearStateSpaceModel,
    state: InverseFilterState,
    anchor_trace: ForwardStepTrace,
    xhathat_next: np.ndarray,
    kappa_fwd: float,
    assumed_forward: FilterKind,
    anchor: SigmaStarAnchor,
) -> np.ndarray:
    if SigmaStarAnchor(anchor) is SigmaStarAnchor.PREVIOUS:
        # The pass at (x̂̂_k, Σ*_k) has already been computed for the transition
        return posterior_covariance(anchor_trace)
    return update_sigma_star(model, xhathat_next, state.Sigma_star, kappa_fwd, assumed_forward)


# Inverse steps ------------------------------------------------------------------


def iukf_step_with_trace(
    model: NonlinearStateSpaceModel,
    state: InverseFilterState,
    x_next,
    a_next,
    kappa_fwd: float,
    kappa_inv: float,
    assumed_forward: FilterKind = FilterKind.UKF,
    anchor: SigmaStarAnchor = SigmaStarAnchor.PREVIOUS,
) -> Tuple[InverseFilterState, InverseStepTrace]:
    """IUKF step returning the intermediate quantities as well."""
    n_x = model.n_x
    x_next = as_vector(x_next, n_x, "x_next")
    a_next = as_vector(a_next, model.n_a, "a_next")
    xhathat = as_vector(state.xhathat, n_x, "xhathat")

    augmented = AugmentedState.from_state(state, model.R)
    sigma_set = generate_sigma_points(augmented.zhat, augmented.Sigma_z, kappa_inv)

    # Points whose estimate block coincides share one forward replay; each
    # distinct estimate gets its own sigma points and gain.
    passes: Dict[bytes, ForwardStepTrace] = {}
    propagated = np.empty((len(sigma_set), n_x))
    for j, point in enumerate(sigma_set.points):
        x_part = point[:n_x]
        key = x_part.tobytes()
        if key not in passes:
            passes[key] = forward_pass(model, assumed_forward, x_part, state.Sigma_star, kappa_fwd)
        propagated[j] = replay_update(model, passes[key], x_next, point[n_x:])

    anchor_trace = passes.get(xhathat.tobytes())
    if anchor_trace is None:
        anchor_trace = forward_pass(model, assumed_forward, xhathat, state.Sigma_star, kappa_fwd)

    # Time update: process noise lives in the augmentation, nothing is added
    xhathat_pred, Sigma_bar_pred = unscented_moments(sigma_set, propagated)

    # Measurement update reuses the propagated points
    a_star = np.array([np.atleast_1d(model.g(point)) for point in propagated], dtype=float)
    ahat_pred, Sigma_a = unscented_moments(sigma_set, a_star, model.Sigma_eps)
    Sigma_xa = cross_covariance(sigma_set, propagated, a_star, xhathat_pred, ahat_pred)
    gain = kalman_gain(Sigma_xa, Sigma_a)

    xhathat_next = xhathat_pred + gain @ (a_next - ahat_pred)
    Sigma_bar_next = symmetrize(Sigma_bar_pred - gain @ Sigma_a @ gain.T)
    Sigma_star_next = _advance_sigma_star(
        model, state, anchor_trace, xhathat_next, kappa_fwd, assumed_forward, anchor
    )

    next_state = InverseFilterState(
        xhathat=xhathat_next,
        Sigma_bar=Sigma_bar_next,
        Sigma_star=Sigma_star_next,
        k=state.k + 1,
    )
    trace = InverseStepTrace(
        xhathat_pred=xhathat_pred,
        Sigma_bar_pred=Sigma_bar_pred,
        ahat_pred=ahat_pred,
        Sigma_a=Sigma_a,
        Sigma_xa=Sigma_xa,
        gain=gain,
        forward=anchor_trace,
        sigma_points=len(sigma_set),
    )
    return next_state, trace


def iukf_step(
    model: NonlinearStateSpaceModel,
    state: InverseFilterState,
    x_next,
    a_next,
    kappa_fwd: float,
    kappa_inv: float,
    assumed_forward: FilterKind = FilterKind.UKF,
    anchor: SigmaStarAnchor = SigmaStarAnchor.PREVIOUS,
) -> InverseFilterState:
    """
    One IUKF step over the augmented state [x̂_kᵀ, v_{k+1}ᵀ]ᵀ.

    Args:
        model: System model known to both agents
        state: (x̂̂_k, Σ̄_k, Σ*_k)
        x_next: True state x_{k+1}
        a_next: Defender observation a_{k+1}
        kappa_fwd: Assumed κ of the adversary's UKF
        kappa_inv: IUKF scaling κ̄, n_x + n_y + κ̄ > 0
        assumed_forward: Forward filter whose step f̃ replays
        anchor: Estimate at which Σ* is advanced

    Returns:
        Inverse state at k + 1
    """
    return iukf_step_with_trace(model, state, x_next, a_next, kappa_fwd, kappa_inv, assumed_forward, anchor)[0]


def iekf_step_with_trace(
    model: NonlinearStateSpaceModel,
    state: InverseFilterState,
    x_next,
    a_next,
    kappa_fwd: float = 0.0,
    assumed_forward: FilterKind = FilterKind.EKF,
    anchor: SigmaStarAnchor = SigmaStarAnchor.PREVIOUS,
) -> Tuple[InverseFilterState, InverseStepTrace]:
    """IEKF step returning the intermediate quantities as well."""
    n_x = model.n_x
    x_next = as_vector(x_next, n_x, "x_next")
    a_next = as_vector(a_next, model.n_a, "a_next")
    xhathat = as_vector(state.xhathat, n_x, "xhathat")

    anchor_trace = forward_pass(model, assumed_forward, xhathat, state.Sigma_star, kappa_fwd)
    xhathat_pred = replay_update(model, anchor_trace, x_next, np.zeros(model.n_y))

    F_tilde = ftilde_jacobian(model, assumed_forward, xhathat, state.Sigma_star, x_next, kappa_fwd)
    K = anchor_trace.gain
    Sigma_bar_pred = symmetrize(F_tilde @ state.Sigma_bar @ F_tilde.T + K @ model.R @ K.T)

    G = model.jacobian_g(xhathat_pred)
    ahat_pred = np.atleast_1d(model.g(xhathat_pred)).astype(float)
    Sigma_a = symmetrize(G @ Sigma_bar_pred @ G.T + model.Sigma_eps)
    Sigma_xa = Sigma_bar_pred @ G.T
    gain = kalman_gain(Sigma_xa, Sigma_a)

    xhathat_next = xhathat_pred + gain @ (a_next - ahat_pred)
    Sigma_bar_next = symmetrize(Sigma_bar_pred - gain @ Sigma_a @ gain.T)
    Sigma_star_next = _advance_sigma_star(
        model, state, anchor_trace, xhathat_next, kappa_fwd, assumed_forward, anchor
    )

    next_state = InverseFilterState(
        xhathat=xhathat_next,
        Sigma_bar=Sigma_bar_next,
        Sigma_star=Sigma_star_next,
        k=state.k + 1,
    )
    trace = InverseStepTrace(
        xhathat_pred=xhathat_pred,
        Sigma_bar_pred=Sigma_bar_pred,
        ahat_pred=ahat_pred,
        Sigma_a=Sigma_a,
        Sigma_xa=Sigma_xa,
        gain=gain,
        forward=anchor_trace,
    )
    return next_state, trace


def iekf_step(
    model: NonlinearStateSpaceModel,
    state: InverseFilterState,
    x_next,
    a_next,
    kappa_fwd: float = 0.0,
    assumed_forward: FilterKind = FilterKind.EKF,
    anchor: SigmaStarAnchor = SigmaStarAnchor.PREVIOUS,
) -> InverseFilterState:
    """
    One IEKF step: EKF on x̂_{k+1} = f̃(x̂_k, Σ*_k, x_{k+1}) + K_{k+1} v_{k+1} observed through g.

    The transition Jacobian is taken by central differences over f̃; the
    process noise covariance is K R Kᵀ with K from the replicated forward step.
    """
    return iekf_step_with_trace(model, state, x_next, a_next, kappa_fwd, assumed_forward, anchor)[0]


def inverse_step(
    model: NonlinearStateSpaceModel,
    inverse_kind: FilterKind,
    state: InverseFilterState,
    x_next,
    a_next,
    kappa_fwd: float,
    kappa_inv: float,
    assumed_forward: FilterKind,
    anchor: SigmaStarAnchor = SigmaStarAnchor.PREVIOUS,
) -> Tuple[InverseFilterState, InverseStepTrace]:
    if FilterKind(inverse_kind) is FilterKind.UKF:
        return iukf_step_with_trace(model, state, x_next, a_next, kappa_fwd, kappa_inv, assumed_forward, anchor)
    return iekf_step_with_trace(model, state, x_next, a_next, kappa_fwd, assumed_forward, anchor)


def run_inverse_filter(
    model: NonlinearStateSpaceModel,
    inverse_kind: FilterKind,
    assumed_forward_kind: FilterKind,
    assumed_kappa_fwd: float,
    init: InverseFilterState,
    trajectory: Trajectory,
    forward_estimates: np.ndarray,
    defender_obs: np.ndarray,
    kappa_inv: float = 1.0,
    anchor: SigmaStarAnchor = SigmaStarAnchor.PREVIOUS,
) -> InverseRun:
    """
    Fold an inverse filter over (x_k, a_k), k = 1..K.

    Args:
        model: System model
        inverse_kind: Inverse estimator (ukf → IUKF, ekf → IEKF)
        assumed_forward_kind: Forward filter the defender believes the adversary runs
        assumed_kappa_fwd: κ the defender attributes to the adversary's UKF
        init: (x̂̂_0, Σ̄_0, Σ*_0)
        trajectory: Ground truth; only the states are consumed
        forward_estimates: Adversary estimates x̂_0..x̂_K, used for error bookkeeping only
        defender_obs: a_1..a_K stacked as rows
        kappa_inv: IUKF scaling κ̄
        anchor: Estimate at which Σ* is advanced

    Raises:
        StepFailure: a step failed; carries the failing time index
    """
    kind = FilterKind(inverse_kind)
    assumed = FilterKind(assumed_forward_kind)
    horizon = trajectory.horizon
    forward_estimates = np.asarray(forward_estimates, dtype=float)
    defender_obs = np.asarray(defender_obs, dtype=float).reshape(-1, model.n_a)
    if forward_estimates.shape != (horizon + 1, model.n_x):
        raise DimensionMismatchError(f"forward estimates must have shape ({horizon + 1}, {model.n_x})")
    if defender_obs.shape[0] != horizon:
        raise DimensionMismatchError(f"expected {horizon} defender observations, got {defender_obs.shape[0]}")

    initial = InverseFilterState(
        xhathat=as_vector(init.xhathat, model.n_x, "xhathat0"),
        Sigma_bar=symmetrize(np.atleast_2d(np.asarray(init.Sigma_bar, dtype=float))),
        Sigma_star=symmetrize(np.atleast_2d(np.asarray(init.Sigma_star, dtype=float))),
        k=0,
    )
    states: List[InverseFilterState] = []
    traces: List[InverseStepTrace] = []
    state = initial
    for k in range(1, horizon + 1):
        try:
            state, trace = inverse_step(
                model,
                kind,
                state,
                trajectory.states[k],
                defender_obs[k - 1],
                assumed_kappa_fwd,
                kappa_inv,
                assumed,
                anchor,
            )
        except InvFilterError as e:
            logger.warning(
                "Inverse filter step failed",
                filter=kind.value,
                assumed_forward=assumed.value,
                step=k,
                error_message=str(e),
            )
            raise StepFailure(k, e, filter_name=f"inverse {kind.value}") from e
        states.append(state)
        traces.append(trace)

    estimates = np.array([initial.xhathat] + [s.xhathat for s in states])
    return InverseRun(
        kind=kind,
        assumed_forward=assumed,
        initial=initial,
        states=states,
        traces=traces,
        errors=forward_estimates - estimates,
    )
