"""
Independent reference implementations used as test oracles: the Kalman
filter, the inverse Kalman filter and random polynomial models.
"""

from typing import List, Tuple

import numpy as np

from invfilter.core.statespace import NonlinearStateSpaceModel


def kalman_filter(A, H, Q, R, x0hat, Sigma0, observations) -> Tuple[List[np.ndarray], List[np.ndarray], List[np.ndarray]]:
    """Textbook KF. Returns (estimates x̂_0..x̂_K, covariances Σ_0..Σ_K, gains K_1..K_K)."""
    xhat = np.asarray(x0hat, dtype=float)
    P = np.asarray(Sigma0, dtype=float)
    estimates, covariances, gains = [xhat], [P], []
    for y in observations:
        x_pred = A @ xhat
        P_pred = A @ P @ A.T + Q
        S = H @ P_pred @ H.T + R
        K = P_pred @ H.T @ np.linalg.inv(S)
        xhat = x_pred + K @ (y - H @ x_pred)
        P = P_pred - K @ S @ K.T
        estimates.append(xhat)
        covariances.append(P)
        gains.append(K)
    return estimates, covariances, gains


def inverse_kalman_filter(A, H, G, R, Sigma_eps, gains, states, actions, xhathat0, Sigma_bar0):
    """
    IKF: x̂_{k+1} = (I − K H) A x̂_k + K H x_{k+1} + K v_{k+1}, a_k = G x̂_k + ε_k.

    Returns (estimates x̂̂_0..x̂̂_K, covariances Σ̄_0..Σ̄_K).
    """
    n = A.shape[0]
    xhh = np.asarray(xhathat0, dtype=float)
    P = np.asarray(Sigma_bar0, dtype=float)
    estimates, covariances = [xhh], [P]
    for k, K in enumerate(gains, start=1):
        F = (np.eye(n) - K @ H) @ A
        x_pred = F @ xhh + K @ H @ states[k]
        P_pred = F @ P @ F.T + K @ R @ K.T
        S = G @ P_pred @ G.T + Sigma_eps
        Kbar = P_pred @ G.T @ np.linalg.inv(S)
        xhh = x_pred + Kbar @ (actions[k - 1] - G @ x_pred)
        P = P_pred - Kbar @ S @ Kbar.T
        estimates.append(xhh)
        covariances.append(P)
    return estimates, covariances


def riccati_fixed_point(A, H, Q, R, Sigma0, iterations: int = 2000) -> np.ndarray:
    """Posterior steady-state KF covariance by iterating the Riccati map."""
    P = np.asarray(Sigma0, dtype=float)
    for _ in range(iterations):
        P_pred = A @ P @ A.T + Q
        S = H @ P_pred @ H.T + R
        K = P_pred @ H.T @ np.linalg.inv(S)
        P = P_pred - K @ S @ K.T
    return P


def random_spd(rng: np.random.Generator, n: int, scale: float = 0.1) -> np.ndarray:
    M = rng.normal(size=(n, n))
    return scale * (M @ M.T / n + np.eye(n))


def random_polynomial_model(rng: np.random.Generator, n_x: int = 2, n_y: int = 2, zero_R: bool = False):
    """Quadratic f and h with bounded coefficients, g linear in the estimate."""
    A = 0.8 * np.eye(n_x) + 0.1 * rng.uniform(-1, 1, size=(n_x, n_x))
    B = 0.05 * rng.uniform(-1, 1, size=(n_x, n_x))
    C = np.eye(n_y, n_x) + 0.2 * rng.uniform(-1, 1, size=(n_y, n_x))
    D = 0.1 * rng.uniform(-1, 1, size=(n_y, n_x))
    E = rng.uniform(-1, 1, size=(1, n_x))
    return NonlinearStateSpaceModel(
        f=lambda x: A @ x + B @ (x * x),
        h=lambda x: C @ x + D @ (x * x),
        g=lambda x: E @ x,
        Q=random_spd(rng, n_x),
        R=np.zeros((n_y, n_y)) if zero_R else random_spd(rng, n_y),
        Sigma_eps=np.array([[0.5]]),
        n_x=n_x,
        n_y=n_y,
        n_a=1,
        name="polynomial",
    )
