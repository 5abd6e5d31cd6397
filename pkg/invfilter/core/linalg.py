"""
Small dense linear-algebra helpers shared by the filters and the bounds.
"""

from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from invfilter.errors import DimensionMismatchError

# Central-difference step scale for model Jacobians (EKF, IEKF)
JACOBIAN_STEP = 1e-6


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def as_vector(value, dim: int, name: str) -> np.ndarray:
    """Coerce to a float vector of length ``dim`` or reject the input."""
    vec = np.atleast_1d(np.asarray(value, dtype=float))
    if vec.ndim != 1 or vec.shape[0] != dim:
        raise DimensionMismatchError(f"{name} must have dimension {dim}, got shape {np.shape(value)}")
    return vec


def as_matrix(value, rows: int, cols: int, name: str) -> np.ndarray:
    """Coerce to a float matrix of shape (rows, cols); scalars are accepted for 1x1."""
    mat = np.atleast_2d(np.asarray(value, dtype=float))
    if mat.shape != (rows, cols):
        raise DimensionMismatchError(f"{name} must have shape ({rows}, {cols}), got {mat.shape}")
    return mat


def is_symmetric(matrix: np.ndarray, tol: float = 1e-9) -> bool:
    scale = 1.0 + float(np.max(np.abs(matrix))) if matrix.size else 1.0
    return bool(np.max(np.abs(matrix - matrix.T), initial=0.0) <= tol * scale)


def is_psd(matrix: np.ndarray, tol: float = 1e-9) -> bool:
    if not is_symmetric(matrix, tol):
        return False
    eigenvalues = np.linalg.eigvalsh(symmetrize(matrix))
    scale = 1.0 + float(np.max(np.abs(eigenvalues), initial=0.0))
    return bool(eigenvalues.min(initial=0.0) >= -tol * scale)


def gaussian_factor(covariance: np.ndarray) -> np.ndarray:
    """
    Factor L with L Lᵀ = covariance, used for drawing Gaussian noise.

    Cholesky first; rank-deficient covariances (e.g. noise entering through a
    gain vector) are factored through the eigendecomposition with negative
    eigenvalues clamped at zero.
    """
    covariance = symmetrize(np.asarray(covariance, dtype=float))
    if not np.any(covariance):
        return np.zeros_like(covariance)
    try:
        return linalg.cholesky(covariance, lower=True)
    except linalg.LinAlgError:
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def finite_difference_jacobian(
    func: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    step_scale: float = JACOBIAN_STEP,
    f0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Central-difference Jacobian of ``func`` at ``x``.

    Args:
        func: Vector map
        x: Linearisation point
        step_scale: Per-coordinate step is step_scale * (1 + |x_i|)
        f0: Optional func(x), only used to size the output

    Returns:
        Matrix of shape (len(func(x)), len(x))
    """
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = np.atleast_1d(func(x))
    jac = np.empty((f0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        step = step_scale * (1.0 + abs(x[i]))
        forward = x.copy()
        backward = x.copy()
        forward[i] += step
        backward[i] -= step
        jac[:, i] = (np.atleast_1d(func(forward)) - np.atleast_1d(func(backward))) / (2.0 * step)
    return jac


def regularize(matrix: np.ndarray, delta_scale: float) -> Tuple[np.ndarray, float]:
    """
    Add δI with δ = delta_scale * max(1, trace/n) so the matrix can be inverted.

    Returns:
        (regularised matrix, δ)
    """
    n = matrix.shape[0]
    delta = delta_scale * max(1.0, float(np.trace(matrix)) / n)
    return symmetrize(matrix) + delta * np.eye(n), delta


def wrap_angle(angle):
    """Wrap angles to (-π, π]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)
