"""
Linear Gaussian toy system; every filter reduces to its Kalman form on it.
"""

from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from invfilter.core.linalg import as_matrix, gaussian_factor
from invfilter.core.statespace import NonlinearStateSpaceModel
from invfilter.scenarios.base import InitialConditions, ScenarioConfig, resolve_parameters

LINEAR_DEFAULTS: Dict[str, Any] = {
    "A": [[0.9, 0.1], [0.0, 0.8]],
    "H": [[1.0, 0.5]],
    "G": [[1.0, 0.0], [0.0, 1.0]],
    "Q": [[0.1, 0.0], [0.0, 0.1]],
    "R": [[0.5]],
    "Sigma_eps": [[0.2, 0.0], [0.0, 0.2]],
    "x0": [1.0, 0.0],
    "Sigma0": [[1.0, 0.0], [0.0, 1.0]],
    "Sigma_bar0": [[1.0, 0.0], [0.0, 1.0]],
    "kappa": 1.0,
    "kappa_inv": 1.0,
    "assumed_kappa": 1.0,
    "horizon": 50,
    "runs": 200,
}


class AffineMap:
    """x ↦ M x (+ offset); picklable and carries its own Jacobian."""

    def __init__(self, matrix: np.ndarray, offset: Optional[np.ndarray] = None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.offset = np.zeros(self.matrix.shape[0]) if offset is None else np.asarray(offset, dtype=float)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float) + self.offset

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.matrix


class GaussianInitial:
    """x₀ ~ N(mean, Σ₀), x̂₀ = mean, x̂̂₀ ~ N(x̂₀, Σ̄₀): initial errors match the filters' priors."""

    def __init__(self, mean: np.ndarray, Sigma0: np.ndarray, Sigma_bar0: np.ndarray):
        self.mean = np.asarray(mean, dtype=float)
        self.factor = gaussian_factor(Sigma0)
        self.bar_factor = gaussian_factor(Sigma_bar0)

    def __call__(self, rng: np.random.Generator) -> InitialConditions:
        n = self.mean.shape[0]
        x0 = self.mean + self.factor @ rng.standard_normal(n)
        xhathat0 = self.mean + self.bar_factor @ rng.standard_normal(n)
        return InitialConditions(x0=x0, x0hat=self.mean.copy(), xhathat0=xhathat0)


def linear_toy_model(
    parameters: Optional[Mapping[str, Any]] = None,
) -> Tuple[NonlinearStateSpaceModel, ScenarioConfig]:
    """
    Affine f, h, g built from matrices A, H, G.

    Args:
        parameters: Overrides for LINEAR_DEFAULTS; scalars are accepted for 1 × 1 systems
    """
    params = resolve_parameters("linear", LINEAR_DEFAULTS, parameters)
    A = np.atleast_2d(np.asarray(params["A"], dtype=float))
    n_x = A.shape[0]
    H = np.atleast_2d(np.asarray(params["H"], dtype=float))
    G = np.atleast_2d(np.asarray(params["G"], dtype=float))
    n_y, n_a = H.shape[0], G.shape[0]
    as_matrix(A, n_x, n_x, "A")
    as_matrix(H, n_y, n_x, "H")
    as_matrix(G, n_a, n_x, "G")

    transition, observation, action = AffineMap(A), AffineMap(H), AffineMap(G)
    model = NonlinearStateSpaceModel(
        f=transition,
        h=observation,
        g=action,
        Q=np.atleast_2d(np.asarray(params["Q"], dtype=float)),
        R=np.atleast_2d(np.asarray(params["R"], dtype=float)),
        Sigma_eps=np.atleast_2d(np.asarray(params["Sigma_eps"], dtype=float)),
        n_x=n_x,
        n_y=n_y,
        n_a=n_a,
        F_jac=transition.jacobian,
        H_jac=observation.jacobian,
        G_jac=action.jacobian,
        name="linear",
    )
    Sigma0 = as_matrix(params["Sigma0"], n_x, n_x, "Sigma0")
    Sigma_bar0 = as_matrix(params["Sigma_bar0"], n_x, n_x, "Sigma_bar0")
    scenario = ScenarioConfig(
        name="linear",
        parameters=params,
        Sigma0=Sigma0,
        Sigma_bar0=Sigma_bar0,
        kappa=float(params["kappa"]),
        kappa_inv=float(params["kappa_inv"]),
        assumed_kappa=float(params["assumed_kappa"]),
        horizon=int(params["horizon"]),
        runs=int(params["runs"]),
        sampler=GaussianInitial(np.atleast_1d(np.asarray(params["x0"], dtype=float)), Sigma0, Sigma_bar0),
    )
    return model, scenario
