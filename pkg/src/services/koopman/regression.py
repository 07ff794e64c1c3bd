"""EDMD with control: assembly of lifted snapshots and operator regression.

Both solvers estimate K = [A B] in Xi(X+) ~ K [Xi(X); Gamma]:
- fit_ls: minimum-norm least squares through an SVD pseudo-inverse
- fit_tls: classical total least squares on the stacked data matrix,
  which also allows errors in the regressors

Rows are divided by their root-mean-square before the SVD (no centering)
so observables of very different magnitude share one truncation threshold;
K is mapped back to the original units afterwards.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as la

from src.core.exceptions import IdentificationError, RankDeficiencyWarning, ValidationError
from src.services.koopman.lifting import DEFAULT_DICTIONARY, LiftingDictionary
from src.services.koopman.model import LiftedModel
from src.services.koopman.snapshots import SnapshotDataset

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF_FACTOR = 10.0
TLS_SINGULAR_TOLERANCE = 1e-10
# sigma_{d+1}([D Y]) must stay below this fraction of sigma_min(D)
TLS_GAP_RATIO = 0.5


class LiftedSnapshots(NamedTuple):
    """Lifted regression data."""
    Xi_X: np.ndarray
    Xi_Xplus: np.ndarray
    Gamma: np.ndarray


@dataclass
class RankReport:
    """Numerical rank of a data or Krylov matrix."""

    rank: int
    rows: int
    cols: int
    singular_values: np.ndarray
    cutoff: float
    condition_number: float

    @property
    def full_row_rank(self) -> bool:
        return self.rank == self.rows

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "rows": self.rows,
            "cols": self.cols,
            "full_row_rank": self.full_row_rank,
            "condition_number": self.condition_number,
            "cutoff": self.cutoff,
            "singular_values": self.singular_values.tolist(),
        }


def svd_cutoff(singular_values: np.ndarray, shape: tuple[int, int], factor: float) -> float:
    """Truncation threshold sigma_max * max(shape) * eps * factor."""
    if singular_values.size == 0:
        return 0.0
    return float(singular_values.max() * max(shape) * np.finfo(float).eps * factor)


def rank_report(M: np.ndarray, factor: float = DEFAULT_CUTOFF_FACTOR) -> RankReport:
    """SVD-based numerical rank of M with the module-wide cutoff."""
    s = la.svdvals(M) if M.size else np.zeros(0)
    cutoff = svd_cutoff(s, M.shape, factor)
    kept = s[s > cutoff]
    rank = int(kept.size)
    if rank == 0:
        condition = float("inf")
    elif rank < min(M.shape):
        condition = float("inf")
    else:
        condition = float(kept.max() / kept.min())
    return RankReport(
        rank=rank,
        rows=M.shape[0],
        cols=M.shape[1],
        singular_values=s,
        cutoff=cutoff,
        condition_number=condition,
    )


def truncated_pinv(M: np.ndarray, factor: float = DEFAULT_CUTOFF_FACTOR) -> tuple[np.ndarray, float]:
    """
    Moore-Penrose pseudo-inverse via SVD, dropping singular values below the cutoff.

    Returns:
        (pseudo-inverse, cutoff used)
    """
    U, s, Vt = la.svd(M, full_matrices=False)
    cutoff = svd_cutoff(s, M.shape, factor)
    s_inv = np.zeros_like(s)
    keep = s > cutoff
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T, cutoff


def assemble(
    dataset: SnapshotDataset, dictionary: LiftingDictionary = DEFAULT_DICTIONARY
) -> LiftedSnapshots:
    """
    Lift X and X+ column-wise; inputs pass through un-lifted.

    Raises:
        ValidationError: If the dataset is empty or its column counts differ
    """
    if dataset.n_pairs == 0:
        raise ValidationError("Cannot assemble an empty dataset")
    if not (dataset.X.shape[1] == dataset.X_plus.shape[1] == dataset.Gamma.shape[1]):
        raise ValidationError("Dataset column counts differ")
    return LiftedSnapshots(
        Xi_X=dictionary.lift_many(dataset.X),
        Xi_Xplus=dictionary.lift_many(dataset.X_plus),
        Gamma=np.asarray(dataset.Gamma, dtype=float),
    )


def check_rank(Omega: np.ndarray, rank_tol_factor: float = DEFAULT_CUTOFF_FACTOR) -> RankReport:
    """
    Check that the stacked regression matrix [Xi(X); Gamma] has full row rank.

    Rank deficiency only warns: the pseudo-inverse still yields the
    minimum-norm solution. Too few columns warns as well before failing.

    Raises:
        IdentificationError: If there are fewer columns than rows
    """
    rows, cols = Omega.shape
    if cols < rows:
        message = f"Regression matrix is rank deficient: T={cols} snapshot columns < p + l = {rows} rows"
        logger.warning(message)
        warnings.warn(message, RankDeficiencyWarning, stacklevel=2)
        raise IdentificationError(f"Need T >= p + l snapshot columns, got T={cols} < {rows}")

    report = rank_report(Omega, rank_tol_factor)
    logger.info(
        f"Regression matrix rank {report.rank}/{rows}, condition number {report.condition_number:.3e}"
    )
    if not report.full_row_rank:
        message = f"Regression matrix is rank deficient: rank {report.rank} < {rows} rows"
        logger.warning(message)
        warnings.warn(message, RankDeficiencyWarning, stacklevel=2)
    return report


def _validate_blocks(Xi_X: np.ndarray, Xi_Xplus: np.ndarray, Gamma: np.ndarray) -> np.ndarray:
    if Xi_X.shape != Xi_Xplus.shape:
        raise ValidationError(f"Xi_X {Xi_X.shape} and Xi_Xplus {Xi_Xplus.shape} differ")
    if Gamma.ndim != 2 or Gamma.shape[1] != Xi_X.shape[1]:
        raise ValidationError(f"Gamma {Gamma.shape} does not match {Xi_X.shape[1]} columns")
    for name, block in (("Xi_X", Xi_X), ("Xi_Xplus", Xi_Xplus), ("Gamma", Gamma)):
        if not np.all(np.isfinite(block)):
            raise IdentificationError(f"{name} contains non-finite entries")
    return np.vstack([Xi_X, Gamma])


def row_scales(M: np.ndarray) -> np.ndarray:
    """Root-mean-square of each row; all-zero rows keep scale 1."""
    scales = np.sqrt(np.mean(M**2, axis=1))
    scales[scales == 0.0] = 1.0
    return scales


def _scalings(
    Xi_X: np.ndarray, Xi_Xplus: np.ndarray, Gamma: np.ndarray, enabled: bool
) -> tuple[np.ndarray, np.ndarray]:
    """(regressor scales, target scales); one scale per observable for both snapshot blocks."""
    if not enabled:
        return np.ones(Xi_X.shape[0] + Gamma.shape[0]), np.ones(Xi_Xplus.shape[0])
    lifted = row_scales(np.hstack([Xi_X, Xi_Xplus]))
    return np.concatenate([lifted, row_scales(Gamma)]), lifted


def _selector(p: int, dictionary: Optional[LiftingDictionary]) -> np.ndarray:
    if dictionary is None:
        return np.eye(p)
    if dictionary.dim != p:
        raise ValidationError(f"Dictionary dimension {dictionary.dim} does not match p={p}")
    return dictionary.selector()


def fit_ls(
    Xi_X: np.ndarray,
    Xi_Xplus: np.ndarray,
    Gamma: np.ndarray,
    dictionary: Optional[LiftingDictionary] = DEFAULT_DICTIONARY,
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR,
    scale_rows: bool = True,
) -> LiftedModel:
    """
    Least-squares Koopman estimate K = Xi(X+) Omega_bar^+.

    Args:
        Xi_X, Xi_Xplus: Lifted snapshots, (p, T)
        Gamma: Inputs, (l, T)
        dictionary: Dictionary that produced the lifted data; None for raw coordinates
        cutoff_factor: Multiplier of the SVD truncation threshold
        scale_rows: Equilibrate rows by their RMS before the pseudo-inverse

    Raises:
        IdentificationError: On non-finite data
    """
    Omega_bar = _validate_blocks(Xi_X, Xi_Xplus, Gamma)
    p = Xi_X.shape[0]
    d_scale, y_scale = _scalings(Xi_X, Xi_Xplus, Gamma, scale_rows)

    pinv, cutoff = truncated_pinv(Omega_bar / d_scale[:, None], cutoff_factor)
    K = y_scale[:, None] * ((Xi_Xplus / y_scale[:, None]) @ pinv) / d_scale[None, :]
    residual = float(np.linalg.norm(Xi_Xplus - K @ Omega_bar, "fro"))
    logger.info(f"Least-squares fit: p={p}, T={Xi_X.shape[1]}, residual={residual:.6e}")

    return LiftedModel(
        A=K[:, :p],
        B=K[:, p:],
        C=_selector(p, dictionary),
        dictionary=dictionary,
        method="ls",
        residual=residual,
        svd_cutoff=cutoff,
        metadata={"row_scaling": "rms" if scale_rows else "none"},
    )


def _tls_fallback(
    reason: str,
    Xi_X: np.ndarray,
    Xi_Xplus: np.ndarray,
    Gamma: np.ndarray,
    dictionary: Optional[LiftingDictionary],
    cutoff_factor: float,
    scale_rows: bool,
) -> LiftedModel:
    message = f"{reason}; falling back to least squares"
    logger.warning(message)
    warnings.warn(message, RankDeficiencyWarning, stacklevel=3)
    model = fit_ls(
        Xi_X, Xi_Xplus, Gamma, dictionary=dictionary, cutoff_factor=cutoff_factor, scale_rows=scale_rows
    )
    model.method = "tls"
    model.tls_fallback = True
    model.metadata["tls_fallback_reason"] = reason
    return model


def fit_tls(
    Xi_X: np.ndarray,
    Xi_Xplus: np.ndarray,
    Gamma: np.ndarray,
    dictionary: Optional[LiftingDictionary] = DEFAULT_DICTIONARY,
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR,
    scale_rows: bool = True,
) -> LiftedModel:
    """
    Total-least-squares Koopman estimate.

    With D = Omega_bar^T and Y = Xi(X+)^T, the SVD of [D Y] = U S V^T is
    partitioned as V = [[V11, V12], [V21, V22]] with V22 the (p, p) block of
    the target rows and trailing singular directions; then K^T = -V12 V22^-1.

    A unique TLS solution needs sigma_min(D) > sigma_{d+1}([D Y]). When the
    gap closes to within TLS_GAP_RATIO, or V22 is numerically singular, the
    least-squares estimate is returned instead, flagged in the model.

    Raises:
        IdentificationError: On non-finite data or too few columns
    """
    Omega_bar = _validate_blocks(Xi_X, Xi_Xplus, Gamma)
    p = Xi_X.shape[0]
    d = Omega_bar.shape[0]
    T = Omega_bar.shape[1]
    if T <= d + p:
        raise IdentificationError(f"TLS needs T > p + l + p = {d + p} columns, got {T}")

    d_scale, y_scale = _scalings(Xi_X, Xi_Xplus, Gamma, scale_rows)
    D = Omega_bar / d_scale[:, None]
    stacked = np.vstack([D, Xi_Xplus / y_scale[:, None]])
    _, s, Vt = la.svd(stacked.T, full_matrices=False)
    V = Vt.T
    V12 = V[:d, d:]
    V22 = V[d:, d:]

    fallback = (Xi_X, Xi_Xplus, Gamma, dictionary, cutoff_factor, scale_rows)
    regressor_min = float(la.svdvals(D).min())
    if s[d] >= TLS_GAP_RATIO * regressor_min:
        return _tls_fallback(
            f"TLS is ill-conditioned: sigma_(d+1)={s[d]:.3e} against sigma_min(regressors)={regressor_min:.3e}",
            *fallback,
        )
    smallest = float(la.svdvals(V22).min())
    if smallest < TLS_SINGULAR_TOLERANCE:
        return _tls_fallback(f"TLS block V22 is singular (sigma_min={smallest:.3e})", *fallback)

    K_scaled = -la.solve(V22.T, V12.T)
    K = y_scale[:, None] * K_scaled / d_scale[None, :]
    residual = float(np.linalg.norm(Xi_Xplus - K @ Omega_bar, "fro"))
    logger.info(
        f"Total-least-squares fit: p={p}, T={T}, residual={residual:.6e}, "
        f"gap ratio={s[d] / regressor_min:.3e}"
    )

    return LiftedModel(
        A=K[:, :p],
        B=K[:, p:],
        C=_selector(p, dictionary),
        dictionary=dictionary,
        method="tls",
        residual=residual,
        svd_cutoff=svd_cutoff(s, stacked.shape, cutoff_factor),
        metadata={"row_scaling": "rms" if scale_rows else "none"},
    )


def dmdc(X: np.ndarray, X_plus: np.ndarray, Gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Plain DMD with control on raw states: [A B] = X+ [X; Gamma]^+."""
    Omega = np.vstack([X, Gamma])
    K = X_plus @ la.pinv(Omega)
    n = X.shape[0]
    return K[:, :n], K[:, n:]


def identify(
    dataset: SnapshotDataset,
    dictionary: LiftingDictionary = DEFAULT_DICTIONARY,
    method: str = "tls",
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR,
    scale_rows: bool = True,
) -> tuple[LiftedModel, RankReport]:
    """Lift, check the rank assumption, and fit with the chosen method."""
    lifted = assemble(dataset, dictionary)
    report = check_rank(np.vstack([lifted.Xi_X, lifted.Gamma]), cutoff_factor)
    options = {"dictionary": dictionary, "cutoff_factor": cutoff_factor, "scale_rows": scale_rows}
    if method == "ls":
        model = fit_ls(*lifted, **options)
    elif method == "tls":
        model = fit_tls(*lifted, **options)
    else:
        raise ValidationError(f"Unknown fit method '{method}'")
    return model, report
