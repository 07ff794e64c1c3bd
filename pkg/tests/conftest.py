"""Shared fixtures for the koopman-quadrotor test suite."""

import numpy as np
import pytest

from src.services.koopman import LiftedModel
from src.services.quadsim import QuadParams
from src.services.reference import HelixSpec, gen_helix
from tests.helpers import linearized_hover_model


@pytest.fixture
def params() -> QuadParams:
    """Default physical parameters."""
    return QuadParams()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so tests are repeatable."""
    return np.random.default_rng(12345)


@pytest.fixture
def hover_trajectory():
    """Static reference at (0, 0, 1): a degenerate helix."""
    return gen_helix(HelixSpec(radius=0.0, total_height=0.0, duration=2.0, center=(0.0, 0.0, 1.0)))


@pytest.fixture
def gentle_helix():
    """Slow, small helix for closed-loop checks."""
    return gen_helix(HelixSpec(radius=1.0, total_height=1.0, duration=3.0))


@pytest.fixture
def hover_model(params) -> LiftedModel:
    """Exact linearization of the plant at hover."""
    return linearized_hover_model(params)
