"""
Radar tracking of a vehicle re-entering the atmosphere.

State x = [x₁, x₂, x₃, x₄, x₅]: position (km), velocity (km/s) and an
aerodynamic parameter. Continuous dynamics

    ẋ₁ = x₃,  ẋ₂ = x₄,  ẋ₃ = d x₃ + G x₁,  ẋ₄ = d x₄ + G x₂,  ẋ₅ = 0

with drag d = β₀ e^{x₅} exp((ρ₀ − ρ)/h₀) V and gravity G = −Gm₀/ρ³, where
ρ = ‖(x₁, x₂)‖ and V = ‖(x₃, x₄)‖. The drift is integrated by RK4 over each
sampling interval; process noise enters additively once per step. A radar at
(ρ₀, 0) measures range and bearing; the defender sees the estimated position.
"""

from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from invfilter.core.statespace import NonlinearStateSpaceModel
from invfilter.errors import InvalidParameterError, SimulationAbort
from invfilter.scenarios.base import ScenarioConfig, fixed_initial, resolve_parameters

REENTRY_X0 = [6500.4, 349.14, -1.8093, -6.7967, 0.6932]

REENTRY_DEFAULTS: Dict[str, Any] = {
    "rho0": 6374.0,
    "h0": 13.406,
    "Gm0": 3.9860e5,
    "beta0": -0.59783,
    "dt": 0.1,
    "integration_substeps": 1,
    "process_noise": [2.4064e-5, 2.4064e-5, 1e-6],
    "range_std": 1e-3,
    "bearing_std": 0.17e-3,
    "Sigma_eps": 3.0,
    "min_radius": 1.0,
    "x0": REENTRY_X0,
    "x0hat": [6500.4, 349.14, -1.8093, -6.7967, 0.0],
    "Sigma0": [1e-6, 1e-6, 1e-6, 1e-6, 1.0],
    "Sigma_bar0": [1e-5, 1e-5, 1e-5, 1e-5, 1.0],
    "kappa": 2.5,
    "kappa_inv": 3.5,
    "assumed_kappa": 2.5,
    "horizon": 200,
    "runs": 100,
}


class ReentryDynamics:
    """RK4 discretisation of the re-entry drift."""

    def __init__(self, rho0: float, h0: float, Gm0: float, beta0: float, dt: float, substeps: int, min_radius: float):
        if substeps < 1:
            raise InvalidParameterError("integration_substeps must be at least 1")
        self.rho0 = rho0
        self.h0 = h0
        self.Gm0 = Gm0
        self.beta0 = beta0
        self.dt = dt
        self.substeps = substeps
        self.min_radius = min_radius

    def drift(self, x: np.ndarray) -> np.ndarray:
        radius = np.hypot(x[0], x[1])
        if not np.isfinite(radius) or radius < self.min_radius:
            raise SimulationAbort(
                "vehicle radius left the valid domain",
                diagnostics={"radius": float(radius), "state": np.asarray(x, dtype=float).tolist()},
            )
        speed = np.hypot(x[2], x[3])
        drag = self.beta0 * np.exp(x[4]) * np.exp((self.rho0 - radius) / self.h0) * speed
        gravity = -self.Gm0 / radius**3
        return np.array(
            [
                x[2],
                x[3],
                drag * x[2] + gravity * x[0],
                drag * x[3] + gravity * x[1],
                0.0,
            ]
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = self.dt / self.substeps
        for _ in range(self.substeps):
            k1 = self.drift(x)
            k2 = self.drift(x + 0.5 * h * k1)
            k3 = self.drift(x + 0.5 * h * k2)
            k4 = self.drift(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return x


class RadarObservation:
    """Range and bearing from a radar at (ρ₀, 0)."""

    def __init__(self, rho0: float):
        self.rho0 = rho0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        dx = x[0] - self.rho0
        return np.array([np.hypot(dx, x[1]), np.arctan2(x[1], dx)])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        dx = x[0] - self.rho0
        r2 = dx**2 + x[1] ** 2
        r = np.sqrt(r2)
        jac = np.zeros((2, 5))
        jac[0, 0] = dx / r
        jac[0, 1] = x[1] / r
        jac[1, 0] = -x[1] / r2
        jac[1, 1] = dx / r2
        return jac


POSITION_SELECTOR = np.hstack([np.eye(2), np.zeros((2, 3))])


def reentry_model(
    parameters: Optional[Mapping[str, Any]] = None,
) -> Tuple[NonlinearStateSpaceModel, ScenarioConfig]:
    """
    Build the re-entry tracking model and its setup.

    Noise magnitudes and physical constants come from REENTRY_DEFAULTS unless
    overridden; the transition Jacobian is taken by central differences.
    """
    params = resolve_parameters("reentry", REENTRY_DEFAULTS, parameters)
    dt = float(params["dt"])
    dynamics = ReentryDynamics(
        rho0=float(params["rho0"]),
        h0=float(params["h0"]),
        Gm0=float(params["Gm0"]),
        beta0=float(params["beta0"]),
        dt=dt,
        substeps=int(params["integration_substeps"]),
        min_radius=float(params["min_radius"]),
    )
    radar = RadarObservation(float(params["rho0"]))

    Q = dt * np.diag(np.concatenate([[0.0, 0.0], np.asarray(params["process_noise"], dtype=float)]))
    R = np.diag([float(params["range_std"]) ** 2, float(params["bearing_std"]) ** 2])

    model = NonlinearStateSpaceModel(
        f=dynamics,
        h=radar,
        g=lambda xhat: POSITION_SELECTOR @ xhat,
        Q=Q,
        R=R,
        Sigma_eps=float(params["Sigma_eps"]) * np.eye(2),
        n_x=5,
        n_y=2,
        n_a=2,
        H_jac=radar.jacobian,
        G_jac=lambda xhat: POSITION_SELECTOR,
        angle_indices=(1,),
        name="reentry",
    )
    scenario = ScenarioConfig(
        name="reentry",
        parameters=params,
        Sigma0=np.diag(np.asarray(params["Sigma0"], dtype=float)),
        Sigma_bar0=np.diag(np.asarray(params["Sigma_bar0"], dtype=float)),
        kappa=float(params["kappa"]),
        kappa_inv=float(params["kappa_inv"]),
        assumed_kappa=float(params["assumed_kappa"]),
        horizon=int(params["horizon"]),
        runs=int(params["runs"]),
        sampler=fixed_initial(params["x0"], params["x0hat"], params["x0"]),
        position_indices=(0, 1),
    )
    return model, scenario
