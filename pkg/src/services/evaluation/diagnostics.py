"""Spectral and structural diagnostics of identified models.

Ranks are computed from singular values with the same cutoff rule as the
regression pseudo-inverse, and the full singular-value profiles are logged
so borderline verdicts can be judged by hand.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.core.exceptions import ValidationError
from src.services.koopman.regression import DEFAULT_CUTOFF_FACTOR, rank_report

logger = logging.getLogger(__name__)

SCHUR_MARGIN = 1e-9
SCHUR_STABLE = "Schur-stable"
UNSTABLE = "unstable"


@dataclass
class SpectrumReport:
    """Eigenvalues sorted by modulus, largest first."""

    eigenvalues: np.ndarray

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    @property
    def spectral_radius(self) -> float:
        return float(self.moduli.max()) if self.eigenvalues.size else 0.0

    @property
    def verdict(self) -> str:
        return SCHUR_STABLE if self.spectral_radius < 1.0 - SCHUR_MARGIN else UNSTABLE

    @property
    def n_outside_unit_disk(self) -> int:
        return int(np.sum(self.moduli > 1.0))

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "spectral_radius": self.spectral_radius,
            "verdict": self.verdict,
            "outside_unit_disk": self.n_outside_unit_disk,
        }


@dataclass
class RankVerdict:
    """Rank test of a controllability, observability or PBH matrix."""

    kind: str
    rank: int
    required: int
    condition_number: float
    singular_values: np.ndarray

    @property
    def passed(self) -> bool:
        return self.rank == self.required

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rank": self.rank,
            "required": self.required,
            "passed": self.passed,
            "condition_number": self.condition_number,
            "singular_values": self.singular_values.tolist(),
        }


@dataclass
class StabilizabilityReport:
    """PBH test restricted to eigenvalues on or outside the unit circle."""

    passed: bool
    checked: int
    failing_eigenvalues: list[complex] = field(default_factory=list)

    def describe(self) -> str:
        if self.passed:
            return f"stabilizable ({self.checked} marginal/unstable modes checked)"
        modes = ", ".join(f"{z:.4g}" for z in self.failing_eigenvalues)
        return f"not stabilizable: uncontrollable modes {modes}"

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "failing_eigenvalues": [[z.real, z.imag] for z in self.failing_eigenvalues],
        }


def _require_square(M: np.ndarray, name: str) -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains non-finite entries")
    return M.shape[0]


def spectrum(M: np.ndarray) -> SpectrumReport:
    """All eigenvalues of M with a Schur stability verdict."""
    M = np.asarray(M, dtype=float)
    _require_square(M, "M")
    eig = np.linalg.eigvals(M)
    return SpectrumReport(eigenvalues=eig[np.argsort(-np.abs(eig), kind="stable")])


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """[B, AB, ..., A^(p-1) B]."""
    p = _require_square(A, "A")
    if B.ndim != 2 or B.shape[0] != p:
        raise ValidationError(f"B {B.shape} does not match A {A.shape}")
    blocks = [B]
    for _ in range(p - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def observability_matrix(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """[C; CA; ...; CA^(p-1)]."""
    return controllability_matrix(A.T, C.T).T


def _rank_verdict(kind: str, M: np.ndarray, required: int, factor: float) -> RankVerdict:
    report = rank_report(M, factor)
    verdict = RankVerdict(
        kind=kind,
        rank=report.rank,
        required=required,
        condition_number=report.condition_number,
        singular_values=report.singular_values,
    )
    profile = np.array2string(report.singular_values, precision=3, max_line_width=120)
    logger.info(f"{kind}: rank {verdict.rank}/{required}, passed={verdict.passed}")
    logger.info(f"{kind} singular values: {profile}")
    return verdict


def check_controllability(
    A: np.ndarray, B: np.ndarray, factor: float = DEFAULT_CUTOFF_FACTOR
) -> RankVerdict:
    """Numerical rank of the controllability matrix against p."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return _rank_verdict("controllability", controllability_matrix(A, B), A.shape[0], factor)


def check_observability(
    A: np.ndarray, C: np.ndarray, factor: float = DEFAULT_CUTOFF_FACTOR
) -> RankVerdict:
    """Numerical rank of the observability matrix against p."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[1] != A.shape[0]:
        raise ValidationError(f"C {C.shape} does not match A {A.shape}")
    return _rank_verdict("observability", observability_matrix(A, C), A.shape[0], factor)


def check_stabilizability(
    A: np.ndarray, B: np.ndarray, factor: float = DEFAULT_CUTOFF_FACTOR
) -> StabilizabilityReport:
    """rank [lambda I - A, B] = p for every eigenvalue with |lambda| >= 1."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    p = _require_square(A, "A")
    if B.ndim != 2 or B.shape[0] != p:
        raise ValidationError(f"B {B.shape} does not match A {A.shape}")

    failing: list[complex] = []
    checked = 0
    identity = np.eye(p)
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - SCHUR_MARGIN:
            continue
        checked += 1
        pencil = np.hstack([lam * identity - A, B.astype(complex)])
        if rank_report(pencil, factor).rank < p:
            failing.append(complex(lam))

    report = StabilizabilityReport(passed=not failing, checked=checked, failing_eigenvalues=failing)
    logger.info(f"Stabilizability: {report.describe()}")
    return report
