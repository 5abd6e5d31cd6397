"""
Recursive Cramér–Rao lower bounds for the forward and the inverse estimates.

For additive Gaussian noise the information recursion is

    J_k = Q⁻¹ + HᵀR⁻¹H − Q⁻¹F (J_{k−1} + FᵀQ⁻¹F)⁻¹ FᵀQ⁻¹

evaluated here in the equivalent form (Q + F J_{k−1}⁻¹ Fᵀ)⁻¹ + HᵀR⁻¹H, which
does not subtract two large terms when Q has been regularised from a
rank-deficient matrix.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from invfilter.core.linalg import regularize, symmetrize
from invfilter.core.statespace import NonlinearStateSpaceModel, Trajectory
from invfilter.errors import InvalidParameterError, NumericalFailure
from invfilter.filters.forward import FilterKind
from invfilter.filters.inverse import InverseRun, ftilde_jacobian
from invfilter.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_DELTA_SCALE = 1e-8
DEFAULT_INVERSE_DELTA_SCALE = 1e-6


@dataclass(frozen=True, eq=False)
class InformationState:
    """Fisher information J_k with the regularisation δ applied to its process noise."""

    J: np.ndarray
    k: int = 0
    delta: float = 0.0

    def bound(self) -> np.ndarray:
        """J⁻¹, the covariance lower bound."""
        return _spd_inverse(self.J, "information matrix")


def _spd_inverse(matrix: np.ndarray, label: str) -> np.ndarray:
    matrix = symmetrize(np.atleast_2d(np.asarray(matrix, dtype=float)))
    if not np.all(np.isfinite(matrix)):
        raise NumericalFailure(f"{label} has non-finite entries", condition=float("inf"))
    try:
        factor = linalg.cho_factor(matrix, lower=True)
    except linalg.LinAlgError:
        condition = float(np.linalg.cond(matrix))
        raise NumericalFailure(f"{label} is singular (condition {condition:.3e})", condition=condition)
    return symmetrize(linalg.cho_solve(factor, np.eye(matrix.shape[0])))


def information_step(
    J: InformationState,
    F: np.ndarray,
    H: np.ndarray,
    Q_reg: np.ndarray,
    R: np.ndarray,
    delta: float = 0.0,
) -> InformationState:
    """
    One step of the Gaussian information recursion.

    Args:
        J: Information at k − 1
        F: Transition Jacobian
        H: Observation Jacobian
        Q_reg: Invertible process-noise covariance
        R: Observation-noise covariance
        delta: Regularisation already contained in Q_reg, carried as metadata

    Returns:
        Information at k

    Raises:
        NumericalFailure: J_{k−1}, R or the predicted bound is singular
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    prior_bound = _spd_inverse(J.J, "previous information matrix")
    predicted_bound = symmetrize(np.atleast_2d(Q_reg) + F @ prior_bound @ F.T)
    R_inv = _spd_inverse(R, "observation noise covariance")
    J_next = _spd_inverse(predicted_bound, "predicted bound") + H.T @ R_inv @ H
    return InformationState(J=symmetrize(J_next), k=J.k + 1, delta=delta)


def forward_rcrlb_step(
    J: InformationState,
    F: np.ndarray,
    H: np.ndarray,
    Q_reg: np.ndarray,
    R: np.ndarray,
) -> InformationState:
    """J_k from J_{k−1} with F, H evaluated at the forward filter's estimates."""
    return information_step(J, F, H, Q_reg, R)


def inverse_rcrlb_step(
    Jbar: InformationState,
    Ftilde: np.ndarray,
    G: np.ndarray,
    Qbar_reg: np.ndarray,
    Sigma_eps: np.ndarray,
) -> InformationState:
    """J̄_k from J̄_{k−1}: the same recursion with (F̃, G, Q̄, Σ_ε)."""
    return information_step(Jbar, Ftilde, G, Qbar_reg, Sigma_eps)


def rcrlb_position_metric(J: InformationState, indices: Optional[Sequence[int]] = None) -> float:
    """
    √(Σᵢ [J⁻¹]ᵢᵢ) over ``indices`` (all coordinates when None).

    Raises:
        NumericalFailure: J is singular
        InvalidParameterError: an index is out of range
    """
    return float(np.sqrt(selected_trace(J, indices)))


def selected_trace(J: InformationState, indices: Optional[Sequence[int]] = None) -> float:
    """Σᵢ [J⁻¹]ᵢᵢ over ``indices``; the MSE-scale bound recorded per time step."""
    diagonal = np.diag(J.bound())
    if indices is None:
        return float(diagonal.sum())
    indices = list(indices)
    if not indices or min(indices) < 0 or max(indices) >= diagonal.shape[0]:
        raise InvalidParameterError(f"indices {indices} outside state dimension {diagonal.shape[0]}")
    return float(diagonal[indices].sum())


def initial_information(Sigma0: np.ndarray) -> InformationState:
    """J₀ = Σ₀⁻¹."""
    return InformationState(J=_spd_inverse(Sigma0, "initial covariance"), k=0)


def forward_rcrlb_sequence(
    model: NonlinearStateSpaceModel,
    estimates: np.ndarray,
    Sigma0: np.ndarray,
    delta_scale: float = DEFAULT_DELTA_SCALE,
) -> List[InformationState]:
    """
    J_0..J_K along a forward filter's estimates x̂_0..x̂_K.

    F for step k is evaluated at x̂_{k−1} and H at x̂_k.
    """
    Q_reg, delta = regularize(model.Q, delta_scale)
    states = [initial_information(Sigma0)]
    for k in range(1, estimates.shape[0]):
        F = model.jacobian_f(estimates[k - 1])
        H = model.jacobian_h(estimates[k])
        states.append(information_step(states[-1], F, H, Q_reg, model.R, delta))
    return states


def inverse_rcrlb_sequence(
    model: NonlinearStateSpaceModel,
    inverse_run: InverseRun,
    trajectory: Trajectory,
    kappa_fwd: float,
    delta_scale: float = DEFAULT_INVERSE_DELTA_SCALE,
) -> List[InformationState]:
    """
    J̄_0..J̄_K along an inverse filter's estimates.

    F̃ for step k is the finite-difference Jacobian of the assumed forward
    replay at (x̂̂_{k−1}, Σ*_{k−1}, x_k); Q̄ = K R Kᵀ uses the replicated gain
    of that step; G is evaluated at x̂̂_k.
    """
    assumed = FilterKind(inverse_run.assumed_forward)
    previous = [inverse_run.initial] + inverse_run.states[:-1]
    states = [initial_information(inverse_run.initial.Sigma_bar)]
    for k, (prior, current, trace) in enumerate(zip(previous, inverse_run.states, inverse_run.traces), start=1):
        F_tilde = ftilde_jacobian(
            model, assumed, prior.xhathat, prior.Sigma_star, trajectory.states[k], kappa_fwd
        )
        K = trace.forward.gain
        Qbar_reg, delta = regularize(K @ model.R @ K.T, delta_scale)
        G = model.jacobian_g(current.xhathat)
        states.append(information_step(states[-1], F_tilde, G, Qbar_reg, model.Sigma_eps, delta))
    return states


def bound_curve(states: Sequence[InformationState], indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """Selected trace of J_k⁻¹ for every k."""
    return np.array([selected_trace(state, indices) for state in states])
