"""
FM demodulator.

State x = [λ, θ] (message and phase), linear Gauss-Markov dynamics driven by a
scalar noise through the gain [1, −β]ᵀ, observed through the unit phasor
√2 [sin θ, cos θ]. The defender observes the squared message estimate.
"""

from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from invfilter.core.statespace import NonlinearStateSpaceModel
from invfilter.errors import ConfigError
from invfilter.scenarios.base import InitialConditions, ScenarioConfig, resolve_parameters

SQRT2 = np.sqrt(2.0)

FM_DEFAULTS: Dict[str, Any] = {
    "T": 2.0 * np.pi / 16.0,
    "beta": 100.0,
    "noise_variance": 0.01,
    "R": [[1.0, 0.0], [0.0, 1.0]],
    "Sigma_eps": 5.0,
    # "classical": β(e^{−T/β} − 1); "literal": −β e^{−T/β} − 1
    "transition_entry": "classical",
    "Sigma0": 10.0,
    "Sigma_bar0": 5.0,
    "kappa": 1.0,
    "kappa_inv": 1.0,
    "assumed_kappa": 2.0,
    "horizon": 100,
    "runs": 500,
}


def fm_transition_matrix(T: float, beta: float, transition_entry: str = "classical") -> np.ndarray:
    decay = np.exp(-T / beta)
    if transition_entry == "classical":
        coupling = beta * (decay - 1.0)
    elif transition_entry == "literal":
        coupling = -beta * decay - 1.0
    else:
        raise ConfigError(f"transition_entry must be 'classical' or 'literal', got {transition_entry!r}")
    return np.array([[decay, 0.0], [coupling, 1.0]])


def fm_observation(x: np.ndarray) -> np.ndarray:
    return SQRT2 * np.array([np.sin(x[1]), np.cos(x[1])])


def fm_observation_jacobian(x: np.ndarray) -> np.ndarray:
    return np.array([[0.0, SQRT2 * np.cos(x[1])], [0.0, -SQRT2 * np.sin(x[1])]])


def fm_action(xhat: np.ndarray) -> np.ndarray:
    return np.array([xhat[0] ** 2])


def fm_action_jacobian(xhat: np.ndarray) -> np.ndarray:
    return np.array([[2.0 * xhat[0], 0.0]])


def _draw_state(rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.standard_normal(), rng.uniform(-np.pi, np.pi)])


def sample_fm_initial(rng: np.random.Generator) -> InitialConditions:
    """λ₀ ~ N(0, 1), θ₀ ~ U[−π, π]; the forward estimate is an independent draw, the inverse one starts at x₀."""
    x0 = _draw_state(rng)
    x0hat = _draw_state(rng)
    return InitialConditions(x0=x0, x0hat=x0hat, xhathat0=x0.copy())


def fm_demodulator_model(
    parameters: Optional[Mapping[str, Any]] = None,
) -> Tuple[NonlinearStateSpaceModel, ScenarioConfig]:
    """
    Build the FM demodulator model and its published setup.

    Args:
        parameters: Overrides for FM_DEFAULTS

    Returns:
        (model, scenario config)
    """
    params = resolve_parameters("fm_demodulator", FM_DEFAULTS, parameters)
    A = fm_transition_matrix(float(params["T"]), float(params["beta"]), params["transition_entry"])
    noise_gain = np.array([1.0, -float(params["beta"])])
    Q = float(params["noise_variance"]) * np.outer(noise_gain, noise_gain)

    model = NonlinearStateSpaceModel(
        f=lambda x: A @ x,
        h=fm_observation,
        g=fm_action,
        Q=Q,
        R=np.asarray(params["R"], dtype=float),
        Sigma_eps=np.atleast_2d(np.asarray(params["Sigma_eps"], dtype=float)),
        n_x=2,
        n_y=2,
        n_a=1,
        F_jac=lambda x: A,
        H_jac=fm_observation_jacobian,
        G_jac=fm_action_jacobian,
        name="fm_demodulator",
    )
    scenario = ScenarioConfig(
        name="fm_demodulator",
        parameters=params,
        Sigma0=float(params["Sigma0"]) * np.eye(2),
        Sigma_bar0=float(params["Sigma_bar0"]) * np.eye(2),
        kappa=float(params["kappa"]),
        kappa_inv=float(params["kappa_inv"]),
        assumed_kappa=float(params["assumed_kappa"]),
        horizon=int(params["horizon"]),
        runs=int(params["runs"]),
        sampler=sample_fm_initial,
    )
    return model, scenario
