"""
Three-layer system model and ground-truth simulation.

    x_{k+1} = f(x_k) + w_k,      w_k ~ N(0, Q)          defender state
    y_k     = h(x_k) + v_k,      v_k ~ N(0, R)          adversary observation
    a_k     = g(x̂_k) + ε_k,      ε_k ~ N(0, Σ_ε)        defender observation of the adversary's action

Randomness for one Monte Carlo run comes from a single seed split into fixed
substreams, so adding a consumer on one channel never shifts another.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from invfilter.core.linalg import (
    as_matrix,
    as_vector,
    finite_difference_jacobian,
    gaussian_factor,
    is_psd,
    wrap_angle,
)
from invfilter.errors import DimensionMismatchError, InvalidParameterError

VectorMap = Callable[[np.ndarray], np.ndarray]
JacobianMap = Callable[[np.ndarray], np.ndarray]
SeedLike = Union[int, np.random.SeedSequence]

# Substream slots; the order is part of the reproducibility contract
PROCESS_STREAM = 0
MEASUREMENT_STREAM = 1
DEFENDER_STREAM = 2
INITIAL_STREAM = 3
N_STREAMS = 4


@dataclass(frozen=True, eq=False)
class NonlinearStateSpaceModel:
    """
    Deterministic maps (f, h, g) with their Gaussian noise covariances.

    Jacobians are optional; missing ones are evaluated by central differences.
    ``angle_indices`` lists observation components that are angles: their
    innovations are wrapped to (-π, π].
    """

    f: VectorMap
    h: VectorMap
    g: VectorMap
    Q: np.ndarray
    R: np.ndarray
    Sigma_eps: np.ndarray
    n_x: int
    n_y: int
    n_a: int
    F_jac: Optional[JacobianMap] = None
    H_jac: Optional[JacobianMap] = None
    G_jac: Optional[JacobianMap] = None
    angle_indices: Tuple[int, ...] = ()
    name: str = "custom"
    _factors: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for dim_name in ("n_x", "n_y", "n_a"):
            if int(getattr(self, dim_name)) < 1:
                raise InvalidParameterError(f"{dim_name} must be a positive integer")

        for attr, dim in (("Q", self.n_x), ("R", self.n_y), ("Sigma_eps", self.n_a)):
            mat = as_matrix(getattr(self, attr), dim, dim, attr)
            if not is_psd(mat):
                raise InvalidParameterError(f"{attr} must be symmetric positive semi-definite")
            mat = mat.copy()
            mat.setflags(write=False)
            object.__setattr__(self, attr, mat)

        for idx in self.angle_indices:
            if not 0 <= idx < self.n_y:
                raise InvalidParameterError(f"angle index {idx} outside observation dimension {self.n_y}")
        object.__setattr__(self, "angle_indices", tuple(int(i) for i in self.angle_indices))

    # Jacobians -----------------------------------------------------------

    def jacobian_f(self, x: np.ndarray) -> np.ndarray:
        if self.F_jac is not None:
            return as_matrix(self.F_jac(x), self.n_x, self.n_x, "F")
        return finite_difference_jacobian(self.f, x)

    def jacobian_h(self, x: np.ndarray) -> np.ndarray:
        if self.H_jac is not None:
            return as_matrix(self.H_jac(x), self.n_y, self.n_x, "H")
        return finite_difference_jacobian(self.h, x)

    def jacobian_g(self, x: np.ndarray) -> np.ndarray:
        if self.G_jac is not None:
            return as_matrix(self.G_jac(x), self.n_a, self.n_x, "G")
        return finite_difference_jacobian(self.g, x)

    # Observation residuals -------------------------------------------------

    def innovation(self, y: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
        """y − ŷ with angle components wrapped."""
        residual = np.asarray(y, dtype=float) - np.asarray(y_pred, dtype=float)
        if self.angle_indices:
            residual = residual.copy()
            idx = list(self.angle_indices)
            residual[idx] = wrap_angle(residual[idx])
        return residual

    # Noise factors -----------------------------------------------------------

    def noise_factor(self, which: str) -> np.ndarray:
        """Cached Gaussian factor of Q, R or Sigma_eps."""
        if which not in self._factors:
            self._factors[which] = gaussian_factor(getattr(self, which))
        return self._factors[which]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Ground truth x_0..x_K, adversary observations y_1..y_K and the noises used.

    ``observations[k - 1]`` is y_k; ``process_noise[k]`` is w_k.
    """

    states: np.ndarray
    observations: np.ndarray
    process_noise: np.ndarray
    measurement_noise: np.ndarray

    def __post_init__(self):
        for attr in ("states", "observations", "process_noise", "measurement_noise"):
            arr = np.array(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        horizon = self.states.shape[0] - 1
        if not (self.observations.shape[0] == self.process_noise.shape[0] == self.measurement_noise.shape[0] == horizon):
            raise DimensionMismatchError("trajectory arrays disagree on the horizon")

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    def observation(self, k: int) -> np.ndarray:
        """Adversary observation y_k for 1 <= k <= K."""
        return self.observations[k - 1]


def run_streams(seed: SeedLike) -> Tuple[np.random.Generator, ...]:
    """Split one run seed into (process, measurement, defender, initial) generators."""
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # Children are derived from the spawn key directly; SeedSequence.spawn would
    # advance its counter and hand out different streams on a second call.
    children = [
        np.random.SeedSequence(
            entropy=sequence.entropy,
            spawn_key=tuple(sequence.spawn_key) + (slot,),
            pool_size=sequence.pool_size,
        )
        for slot in range(N_STREAMS)
    ]
    return tuple(np.random.default_rng(child) for child in children)


def draw_gaussian(factor: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` draws of N(0, L Lᵀ) as rows."""
    return rng.standard_normal((count, factor.shape[1])) @ factor.T


def simulate_trajectory(
    model: NonlinearStateSpaceModel,
    x0,
    horizon: int,
    seed: SeedLike,
) -> Trajectory:
    """
    Simulate x_{k+1} = f(x_k) + w_k and y_k = h(x_k) + v_k for k up to ``horizon``.

    Args:
        model: System model
        x0: Initial state (dim n_x)
        horizon: Number of steps K >= 1
        seed: Run seed; process and measurement noise use their own substreams

    Returns:
        Trajectory with K + 1 states and K observations
    """
    if horizon < 1:
        raise InvalidParameterError("horizon must be at least 1")
    x0 = as_vector(x0, model.n_x, "x0")

    streams = run_streams(seed)
    process_noise = draw_gaussian(model.noise_factor("Q"), streams[PROCESS_STREAM], horizon)
    measurement_noise = draw_gaussian(model.noise_factor("R"), streams[MEASUREMENT_STREAM], horizon)

    states = np.empty((horizon + 1, model.n_x))
    observations = np.empty((horizon, model.n_y))
    states[0] = x0
    for k in range(horizon):
        states[k + 1] = as_vector(model.f(states[k]), model.n_x, "f(x)") + process_noise[k]
        observations[k] = as_vector(model.h(states[k + 1]), model.n_y, "h(x)") + measurement_noise[k]

    return Trajectory(
        states=states,
        observations=observations,
        process_noise=process_noise,
        measurement_noise=measurement_noise,
    )


def replay_states(model: NonlinearStateSpaceModel, x0, process_noise: np.ndarray) -> np.ndarray:
    """Re-apply x_{k+1} = f(x_k) + w_k with stored noises."""
    states = [as_vector(x0, model.n_x, "x0")]
    for w in process_noise:
        states.append(model.f(states[-1]) + w)
    return np.array(states)


def simulate_defender_observation(
    model: NonlinearStateSpaceModel,
    xhat,
    seed: Union[SeedLike, np.random.Generator],
) -> np.ndarray:
    """
    One defender observation a = g(x̂) + ε with ε ~ N(0, Σ_ε).

    ``seed`` may be a run seed (the defender substream is used) or a generator
    that is already positioned on that substream.
    """
    xhat = as_vector(xhat, model.n_x, "xhat")
    rng = seed if isinstance(seed, np.random.Generator) else run_streams(seed)[DEFENDER_STREAM]
    noise = draw_gaussian(model.noise_factor("Sigma_eps"), rng, 1)[0]
    return as_vector(model.g(xhat), model.n_a, "g(xhat)") + noise


def defender_observations(
    model: NonlinearStateSpaceModel,
    estimates: np.ndarray,
    defender_noise: np.ndarray,
) -> np.ndarray:
    """a_k = g(x̂_k) + ε_k for k = 1..K given stacked estimates x̂_1..x̂_K and noises."""
    if estimates.shape[0] != defender_noise.shape[0]:
        raise DimensionMismatchError("one defender noise draw is needed per estimate")
    return np.array([model.g(xhat) for xhat in estimates]).reshape(-1, model.n_a) + defender_noise


def draw_defender_noise(model: NonlinearStateSpaceModel, horizon: int, seed: SeedLike) -> np.ndarray:
    """ε_1..ε_K from the run's defender substream, shared by every forward filter of the run."""
    return draw_gaussian(model.noise_factor("Sigma_eps"), run_streams(seed)[DEFENDER_STREAM], horizon)
