"""
Pytest configuration for test suite.
Adds project root to Python path to enable imports, and provides shared models.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))
sys.path.insert(0, str(Path(__file__).parent))

from invfilter.core.statespace import NonlinearStateSpaceModel  # noqa: E402
from invfilter.scenarios import build_scenario  # noqa: E402
from oracles import random_polynomial_model  # noqa: E402


@pytest.fixture
def linear_setup():
    """Default two-state linear scenario (model, scenario config)."""
    return build_scenario("linear")


@pytest.fixture
def linear3_setup():
    """Three-state linear system with a two-dimensional observation."""
    return build_scenario(
        "linear",
        {
            "A": [[0.95, 0.1, 0.0], [0.0, 0.9, 0.05], [0.02, 0.0, 0.85]],
            "H": [[1.0, 0.0, 0.5], [0.0, 1.0, 0.0]],
            "G": [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            "Q": np.diag([0.05, 0.02, 0.03]).tolist(),
            "R": [[0.4, 0.05], [0.05, 0.3]],
            "Sigma_eps": [[0.2, 0.0], [0.0, 0.25]],
            "x0": [1.0, -0.5, 0.2],
            "Sigma0": np.eye(3).tolist(),
            "Sigma_bar0": (0.5 * np.eye(3)).tolist(),
        },
    )


@pytest.fixture
def scalar_setup():
    """Scalar system A = 0.9, H = 1, G = 1."""
    return build_scenario(
        "linear",
        {
            "A": 0.9,
            "H": 1.0,
            "G": 1.0,
            "Q": 0.2,
            "R": 0.5,
            "Sigma_eps": 0.3,
            "x0": [0.5],
            "Sigma0": 1.0,
            "Sigma_bar0": 1.0,
        },
    )


@pytest.fixture
def fm_setup():
    return build_scenario("fm_demodulator")


@pytest.fixture
def polynomial_model() -> NonlinearStateSpaceModel:
    return random_polynomial_model(np.random.default_rng(11))
