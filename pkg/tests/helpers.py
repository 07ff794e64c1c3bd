"""Test helpers: synthetic data and reference models."""

import numpy as np

from src.services.koopman import LiftedModel, LiftingDictionary, LiftMode
from src.services.quadsim import ANALYSIS_DIM, INPUT_DIM, QuadParams, QuadState, RotorCommand, rk4_step


def random_states(rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, 12) analysis states away from gimbal lock."""
    states = rng.normal(size=(count, ANALYSIS_DIM))
    states[:, 6] = rng.uniform(-np.pi, np.pi, size=count)
    states[:, 7] = rng.uniform(-1.2, 1.2, size=count)
    states[:, 8] = rng.uniform(-np.pi, np.pi, size=count)
    return states


def linear_snapshots(
    rng: np.random.Generator, p: int, l: int, T: int, scale: float = 1.0  # noqa: E741
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Noise-free data from a random stable (A0, B0): returns A0, B0, Xi_X, Xi_Xplus, Gamma."""
    A0 = rng.normal(size=(p, p))
    A0 *= 0.9 / np.abs(np.linalg.eigvals(A0)).max()
    B0 = rng.normal(size=(p, l))
    Xi_X = scale * rng.normal(size=(p, T))
    Gamma = scale * rng.normal(size=(l, T))
    return A0, B0, Xi_X, A0 @ Xi_X + B0 @ Gamma, Gamma


def _analysis_step(x: np.ndarray, u: np.ndarray, dt: float, params: QuadParams) -> np.ndarray:
    state = QuadState.from_analysis_vector(x)
    return rk4_step(state, RotorCommand(u), dt, params).to_analysis_vector()


def linearized_hover_model(params: QuadParams, dt: float = 0.01, eps: float = 1e-6) -> LiftedModel:
    """Central-difference linearization of the sampled plant at hover, as an identity-dictionary model."""
    x0 = np.zeros(ANALYSIS_DIM)
    u0 = np.full(INPUT_DIM, params.hover_thrust)
    A = np.zeros((ANALYSIS_DIM, ANALYSIS_DIM))
    B = np.zeros((ANALYSIS_DIM, INPUT_DIM))
    for i in range(ANALYSIS_DIM):
        dx = np.zeros(ANALYSIS_DIM)
        dx[i] = eps
        A[:, i] = (_analysis_step(x0 + dx, u0, dt, params) - _analysis_step(x0 - dx, u0, dt, params)) / (2 * eps)
    for j in range(INPUT_DIM):
        du = np.zeros(INPUT_DIM)
        du[j] = eps
        B[:, j] = (_analysis_step(x0, u0 + du, dt, params) - _analysis_step(x0, u0 - du, dt, params)) / (2 * eps)
    return LiftedModel(
        A=A,
        B=B,
        C=np.eye(ANALYSIS_DIM),
        dictionary=LiftingDictionary(LiftMode.IDENTITY),
        method="ls",
        residual=0.0,
        svd_cutoff=0.0,
    )

