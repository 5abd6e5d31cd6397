"""
Sigma-point machinery shared by the forward UKF and the inverse UKF.

Sigma points for (x̂, Σ) with scaling κ are x̂ and x̂ ± the columns of the
lower-triangular square root of (n + κ)Σ, weighted κ/(n + κ) at the centre
and 1/(2(n + κ)) elsewhere.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from invfilter.core.linalg import symmetrize
from invfilter.errors import DimensionMismatchError, FactorizationError, InvalidParameterError
from invfilter.logging_config import get_logger

logger = get_logger(__name__)

JITTER_LEVELS = (1e-12, 1e-10, 1e-8, 1e-6)


class MatrixSqrt(NamedTuple):
    """Lower-triangular L with L Lᵀ = Σ + jitter·I."""

    factor: np.ndarray
    jitter: float


@dataclass(frozen=True, eq=False)
class SigmaPointSet:
    """2n + 1 sigma points (row 0 is the centre) with their weights."""

    points: np.ndarray
    weights: np.ndarray
    kappa: float
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def center(self) -> np.ndarray:
        return self.points[0]

    def __len__(self) -> int:
        return self.points.shape[0]


def sigma_weights(n: int, kappa: float) -> np.ndarray:
    if n + kappa <= 0:
        raise InvalidParameterError(f"n + kappa must be positive (n={n}, kappa={kappa})")
    weights = np.full(2 * n + 1, 1.0 / (2.0 * (n + kappa)))
    weights[0] = kappa / (n + kappa)
    return weights


def robust_sqrt(Sigma: np.ndarray) -> MatrixSqrt:
    """
    Lower-triangular Cholesky factor with jitter escalation.

    Retries with δI for δ in JITTER_LEVELS scaled by max(1, trace(Σ)/n).
    An all-zero matrix has the exact factor 0.

    Raises:
        FactorizationError: every jitter level failed
    """
    Sigma = symmetrize(np.atleast_2d(np.asarray(Sigma, dtype=float)))
    n = Sigma.shape[0]
    if not np.any(Sigma):
        return MatrixSqrt(np.zeros_like(Sigma), 0.0)
    if not np.all(np.isfinite(Sigma)):
        raise FactorizationError("matrix has non-finite entries", matrix=Sigma)

    try:
        return MatrixSqrt(linalg.cholesky(Sigma, lower=True), 0.0)
    except linalg.LinAlgError:
        pass

    scale = max(1.0, float(np.trace(Sigma)) / n)
    for level in JITTER_LEVELS:
        jitter = level * scale
        try:
            factor = linalg.cholesky(Sigma + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError:
            continue
        logger.debug("Cholesky needed jitter", jitter=jitter, dim=n)
        return MatrixSqrt(factor, jitter)

    raise FactorizationError(
        f"matrix is not positive semi-definite (min eigenvalue {np.linalg.eigvalsh(Sigma).min():.3e})",
        matrix=Sigma,
    )


def generate_sigma_points(xhat, Sigma, kappa: float) -> SigmaPointSet:
    """
    Generate 2n + 1 sigma points around ``xhat``.

    Args:
        xhat: Mean (dim n)
        Sigma: Covariance (n × n), symmetric p.s.d.
        kappa: Scaling parameter, n + κ > 0 (κ may be negative)

    Returns:
        SigmaPointSet whose centre equals xhat
    """
    xhat = np.atleast_1d(np.asarray(xhat, dtype=float))
    n = xhat.shape[0]
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if Sigma.shape != (n, n):
        raise DimensionMismatchError(f"covariance shape {Sigma.shape} does not match mean dimension {n}")

    weights = sigma_weights(n, kappa)
    sqrt = robust_sqrt((n + kappa) * Sigma)
    offsets = sqrt.factor.T  # row i is column i of L

    points = np.empty((2 * n + 1, n))
    points[0] = xhat
    points[1 : n + 1] = xhat + offsets
    points[n + 1 :] = xhat - offsets
    return SigmaPointSet(points=points, weights=weights, kappa=float(kappa), jitter=sqrt.jitter)


def propagate(sigma_set: SigmaPointSet, func) -> np.ndarray:
    """Map every sigma point through ``func``; rows of the result follow the set's order."""
    return np.array([np.atleast_1d(func(point)) for point in sigma_set.points], dtype=float)


def _check_count(sigma_set: SigmaPointSet, values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != len(sigma_set):
        raise DimensionMismatchError(f"{name} has {values.shape[0]} rows, expected {len(sigma_set)}")
    return values


def unscented_moments(
    sigma_set: SigmaPointSet,
    propagated: np.ndarray,
    additive_cov: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted mean and covariance of propagated sigma points.

    The covariance Σ ωᵢ pᵢpᵢᵀ − m mᵀ is accumulated in centred form, which is
    the same quantity because the weights sum to one.

    Returns:
        (mean, symmetrised covariance [+ additive_cov])
    """
    propagated = _check_count(sigma_set, propagated, "propagated")
    weights = sigma_set.weights
    mean = weights @ propagated
    centred = propagated - mean
    cov = (centred.T * weights) @ centred
    if additive_cov is not None:
        cov = cov + np.asarray(additive_cov, dtype=float)
    return mean, symmetrize(cov)


def cross_covariance(
    sigma_set: SigmaPointSet,
    left: np.ndarray,
    right: np.ndarray,
    left_mean: np.ndarray,
    right_mean: np.ndarray,
) -> np.ndarray:
    """
    Weighted cross covariance Σ ωᵢ (lᵢ − left_mean)(rᵢ − right_mean)ᵀ.

    Args:
        left_mean: Must be the weighted mean Σ ωᵢ lᵢ of ``left``
        right_mean: Must be the weighted mean Σ ωᵢ rᵢ of ``right``

    With those means the result equals Σ ωᵢ lᵢ rᵢᵀ − left_mean · right_meanᵀ;
    any other centring gives a different matrix.
    """
    left = _check_count(sigma_set, left, "left")
    right = _check_count(sigma_set, right, "right")
    left_centred = left - np.atleast_1d(np.asarray(left_mean, dtype=float))
    right_centred = right - np.atleast_1d(np.asarray(right_mean, dtype=float))
    return (left_centred.T * sigma_set.weights) @ right_centred
