"""Discrete algebraic Riccati equation and LQR gains.

solve_dare uses the structure-preserving doubling algorithm: starting from
A_0 = A, G_0 = B R^-1 B^T, H_0 = Q,

    W_k     = I + G_k H_k
    A_{k+1} = A_k W_k^-1 A_k
    G_{k+1} = G_k + A_k W_k^-1 G_k A_k^T
    H_{k+1} = H_k + A_k^T H_k W_k^-1 A_k

H_k converges quadratically to the stabilizing solution P when (A, B) is
stabilizable and (Q, A) detectable.

When rounding leaves the doubling result short of the residual tolerance,
Newton-Kleinman steps polish it: K = lqr_gain(P), then P solves the
Lyapunov equation P = (A - BK)^T P (A - BK) + Q + K^T R K.
"""

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel

from src.core.exceptions import RiccatiConvergenceError, ValidationError
from src.services.evaluation.diagnostics import check_stabilizability

logger = logging.getLogger(__name__)

DARE_TOLERANCE = 1e-12
DARE_MAX_ITERATIONS = 200
RESIDUAL_TOLERANCE = 1e-8
NEWTON_MAX_STEPS = 20
SYMMETRY_TOLERANCE = 1e-9
PSD_TOLERANCE = 1e-10


def _check_symmetric(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got {M.shape}")
    asymmetry = float(np.linalg.norm(M - M.T))
    if asymmetry > SYMMETRY_TOLERANCE:
        raise ValidationError(f"{name} is not symmetric (||{name} - {name}^T|| = {asymmetry:.3e})")
    return M


@dataclass(frozen=True)
class LqrWeights:
    """State weight Q (n, n) and input weight R (l, l)."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self) -> None:
        Q = _check_symmetric(self.Q, "Q")
        R = _check_symmetric(self.R, "R")
        if np.linalg.eigvalsh(Q).min() < -PSD_TOLERANCE:
            raise ValidationError("Q must be positive semi-definite")
        if np.linalg.eigvalsh(R).min() <= 0.0:
            raise ValidationError("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @classmethod
    def scaled_identity(cls, n: int, l: int, q_scale: float, r_scale: float) -> "LqrWeights":  # noqa: E741
        return cls(Q=np.eye(n) * q_scale, R=np.eye(l) * r_scale)

    def padded(self, p: int, offset: int = 0) -> np.ndarray:
        return pad_Q(self.Q, p, offset=offset)


def pad_Q(Q: np.ndarray, p: int, offset: int = 0) -> np.ndarray:
    """
    Embed Q into a (p, p) zero matrix at rows/columns offset .. offset + n.

    offset = 0 gives [[Q, 0], [0, 0]]; lifted dictionaries that lead with a
    constant pass offset = 1 so Q lands on the copy of x.

    Raises:
        ValidationError: If Q is asymmetric or does not fit
    """
    Q = _check_symmetric(Q, "Q")
    n = Q.shape[0]
    if offset < 0 or offset + n > p:
        raise ValidationError(f"Q of size {n} does not fit into p={p} at offset {offset}")
    Q_bar = np.zeros((p, p))
    Q_bar[offset : offset + n, offset : offset + n] = Q
    return Q_bar


class GainEnvelope(BaseModel):
    """On-disk JSON layout of an LQR gain."""

    p: int
    n: int
    l: int  # noqa: E741
    dictionary: str
    method: str
    K: list[list[float]]
    P: list[list[float]]
    spectral_radius: float
    Q: list[list[float]]
    R: list[list[float]]
    iterations: int
    residual: float
    reduced_coordinates: list[int]
    metadata: dict[str, Any] = {}


@dataclass
class LqrGain:
    """Feedback u = -K z with Riccati solution P and closed-loop spectral radius."""

    K: np.ndarray
    P: np.ndarray
    spectral_radius: float
    iterations: int
    residual: float
    closed_loop_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    reduced_coordinates: list[int] = field(default_factory=list)

    @property
    def l(self) -> int:  # noqa: E743
        return self.K.shape[0]

    @property
    def p(self) -> int:
        return self.K.shape[1]

    def to_envelope(
        self,
        weights: LqrWeights,
        n: int,
        dictionary: str,
        method: str,
        metadata: dict[str, Any] | None = None,
    ) -> GainEnvelope:
        return GainEnvelope(
            p=self.p,
            n=n,
            l=self.l,
            dictionary=dictionary,
            method=method,
            K=self.K.tolist(),
            P=self.P.tolist(),
            spectral_radius=self.spectral_radius,
            Q=weights.Q.tolist(),
            R=weights.R.tolist(),
            iterations=self.iterations,
            residual=self.residual,
            reduced_coordinates=list(self.reduced_coordinates),
            metadata=metadata or {},
        )

    @classmethod
    def from_envelope(cls, envelope: GainEnvelope) -> "LqrGain":
        return cls(
            K=np.array(envelope.K, dtype=float).reshape(envelope.l, envelope.p),
            P=np.array(envelope.P, dtype=float),
            spectral_radius=envelope.spectral_radius,
            iterations=envelope.iterations,
            residual=envelope.residual,
            reduced_coordinates=list(envelope.reduced_coordinates),
        )


def dare_residual(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray, P: np.ndarray) -> float:
    """||A^T P A - P - A^T P B (R + B^T P B)^-1 B^T P A + Q||_F."""
    BtPA = B.T @ P @ A
    correction = BtPA.T @ la.solve(R + B.T @ P @ B, BtPA, assume_a="sym")
    return float(np.linalg.norm(A.T @ P @ A - P - correction + Q, "fro"))


def lqr_gain(A: np.ndarray, B: np.ndarray, R: np.ndarray, P: np.ndarray) -> np.ndarray:
    """K = (R + B^T P B)^-1 B^T P A."""
    return la.solve(R + B.T @ P @ B, B.T @ P @ A, assume_a="sym")


def refine_dare(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    P: np.ndarray,
    max_steps: int = NEWTON_MAX_STEPS,
) -> tuple[np.ndarray, float, int]:
    """
    Newton-Kleinman refinement of an approximate stabilizing DARE solution.

    Stops once the residual is within RESIDUAL_TOLERANCE * ||P||_F, when a step
    no longer lowers the residual, or when the gain stops stabilizing.

    Returns:
        Best P found, its residual and the number of accepted steps
    """
    residual = dare_residual(A, B, Q, R, P)
    steps = 0
    for _ in range(max_steps):
        if residual <= RESIDUAL_TOLERANCE * np.linalg.norm(P, "fro"):
            break
        K = lqr_gain(A, B, R, P)
        A_cl = A - B @ K
        if np.abs(np.linalg.eigvals(A_cl)).max() >= 1.0:
            break
        try:
            candidate = la.solve_discrete_lyapunov(A_cl.T, Q + K.T @ R @ K)
        except (np.linalg.LinAlgError, ValueError):
            break
        candidate = 0.5 * (candidate + candidate.T)
        if not np.all(np.isfinite(candidate)):
            break
        candidate_residual = dare_residual(A, B, Q, R, candidate)
        if candidate_residual >= residual:
            break
        P, residual = candidate, candidate_residual
        steps += 1
    return P, residual, steps


def _doubling(
    A: np.ndarray, G: np.ndarray, H: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, int, bool]:
    identity = np.eye(A.shape[0])
    for k in range(1, max_iter + 1):
        W = identity + G @ H
        try:
            W_inv_A = np.linalg.solve(W, A)
            W_inv_G = np.linalg.solve(W, G)
        except np.linalg.LinAlgError:
            return H, k, False

        H_next = H + A.T @ H @ W_inv_A
        G = G + A @ W_inv_G @ A.T
        A = A @ W_inv_A
        H_next = 0.5 * (H_next + H_next.T)
        G = 0.5 * (G + G.T)

        change = np.linalg.norm(H_next - H, "fro")
        H = H_next
        if not np.all(np.isfinite(H)):
            return H, k, False
        if change <= tol * max(1.0, np.linalg.norm(H, "fro")):
            return H, k, True
    return H, max_iter, False


def solve_dare(
    A: np.ndarray,
    B: np.ndarray,
    Q_bar: np.ndarray,
    R: np.ndarray,
    tol: float = DARE_TOLERANCE,
    max_iter: int = DARE_MAX_ITERATIONS,
) -> LqrGain:
    """
    Stabilizing solution of the discrete algebraic Riccati equation.

    Args:
        A: (p, p) state matrix
        B: (p, l) input matrix
        Q_bar: (p, p) symmetric PSD state weight
        R: (l, l) symmetric PD input weight
        tol: Relative change of P at which doubling stops
        max_iter: Doubling step limit

    Returns:
        LqrGain with K = (R + B^T P B)^-1 B^T P A

    Raises:
        ValidationError: On inconsistent shapes or weights
        RiccatiConvergenceError: If doubling does not converge, the residual
            check fails or A - BK is not Schur stable
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    p = A.shape[0]
    if A.shape != (p, p) or B.ndim != 2 or B.shape[0] != p:
        raise ValidationError(f"Inconsistent shapes A={A.shape}, B={B.shape}")
    Q_bar = _check_symmetric(Q_bar, "Q_bar")
    R = _check_symmetric(R, "R")
    if Q_bar.shape != (p, p) or R.shape != (B.shape[1], B.shape[1]):
        raise ValidationError(f"Weights Q_bar={Q_bar.shape}, R={R.shape} do not match A, B")
    if np.linalg.eigvalsh(R).min() <= 0.0:
        raise ValidationError("R must be positive definite")

    G0 = B @ la.solve(R, B.T, assume_a="sym")
    P, iterations, converged = _doubling(A, G0, Q_bar, tol, max_iter)

    if not converged:
        stabilizability = check_stabilizability(A, B)
        raise RiccatiConvergenceError(
            f"DARE doubling did not converge in {iterations} iterations; {stabilizability.describe()}"
        )

    residual = dare_residual(A, B, Q_bar, R, P)
    if residual > RESIDUAL_TOLERANCE * np.linalg.norm(P, "fro"):
        P, residual, newton_steps = refine_dare(A, B, Q_bar, R, P)
        logger.info(f"Newton refinement: {newton_steps} steps, DARE residual {residual:.3e}")
        iterations += newton_steps

    P_norm = float(np.linalg.norm(P, "fro"))
    if residual > RESIDUAL_TOLERANCE * P_norm:
        stabilizability = check_stabilizability(A, B)
        raise RiccatiConvergenceError(
            f"DARE residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:g} * ||P||_F = {P_norm:.3e}; "
            f"{stabilizability.describe()}"
        )

    K = lqr_gain(A, B, R, P)
    closed_loop = np.linalg.eigvals(A - B @ K)
    radius = float(np.abs(closed_loop).max()) if closed_loop.size else 0.0
    if radius >= 1.0:
        stabilizability = check_stabilizability(A, B)
        raise RiccatiConvergenceError(
            f"Closed loop is not Schur stable (spectral radius {radius:.6f}); {stabilizability.describe()}"
        )

    logger.info(
        f"DARE converged in {iterations} iterations: residual={residual:.3e}, "
        f"closed-loop spectral radius={radius:.6f}"
    )
    return LqrGain(
        K=K,
        P=P,
        spectral_radius=radius,
        iterations=iterations,
        residual=residual,
        closed_loop_eigenvalues=closed_loop,
    )
