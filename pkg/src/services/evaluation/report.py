"""Controller comparison reports.

Each run contributes one grouped NRMSE per controller; the report gives
mean and population standard deviation across runs for every state group
and for the mean over groups, plus the Koopman/PID ratio of the means.
"""

import json
import logging
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, field_validator

from src.core.exceptions import GridMismatchError
from src.services.evaluation.metrics import STATE_GROUPS, grouped_nrmse
from src.services.koopman import TrajectoryLog
from src.services.koopman.lifting import STATE_NAMES

logger = logging.getLogger(__name__)

KOOPMAN = "koopman"
PID = "pid"
MEAN_ROW = "mean"
GROUP_LABELS = {
    "position": "Position",
    "velocity": "Velocity",
    "euler": "Euler angles",
    "angular_velocity": "Angular velocity",
    MEAN_ROW: "Mean",
}


class GroupStat(BaseModel):
    """Mean and spread of a percentage NRMSE across runs."""

    mean: float
    std: float

    @field_validator("mean", "std")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        # NaN marks an undefined metric
        if value < 0:
            raise ValueError(f"NRMSE statistics must be non-negative, got {value}")
        return value

    def __str__(self) -> str:
        return f"{self.mean:.4f} ± {self.std:.4f}"


class EvalReport(BaseModel):
    """Per-controller grouped NRMSE with spectra, rank diagnostics and run metadata."""

    controllers: dict[str, dict[str, GroupStat]]
    per_run: dict[str, list[dict[str, float]]]
    ratio: dict[str, float] = {}
    spectra: dict[str, dict[str, Any]] = {}
    diagnostics: dict[str, dict[str, Any]] = {}
    prediction: dict[str, float] = {}
    fit_comparison: dict[str, dict[str, GroupStat]] = {}
    metadata: dict[str, Any] = {}

    @property
    def n_runs(self) -> int:
        return len(next(iter(self.per_run.values()), []))

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True, allow_nan=True)


def _check_grid(log: TrajectoryLog, times: np.ndarray, label: str) -> None:
    if len(log) != len(times) or not np.allclose(log.times, times, rtol=0.0, atol=1e-9):
        raise GridMismatchError(
            f"{label} log with {len(log)} samples does not share the reference grid of {len(times)} samples"
        )


def _summarize(runs: list[dict[str, float]]) -> dict[str, GroupStat]:
    summary: dict[str, GroupStat] = {}
    for row in list(STATE_GROUPS) + [MEAN_ROW]:
        values = np.array([run[row] for run in runs], dtype=float)
        summary[row] = GroupStat(mean=float(np.mean(values)), std=float(np.std(values)))
    return summary


def _with_mean(groups: dict[str, float]) -> dict[str, float]:
    return {**groups, MEAN_ROW: float(np.nanmean(list(groups.values())))}


def compare_controllers(
    koopman_logs: Sequence[TrajectoryLog] | TrajectoryLog,
    pid_logs: Sequence[TrajectoryLog] | TrajectoryLog,
    references: Sequence[np.ndarray] | np.ndarray,
    metadata: Optional[dict[str, Any]] = None,
) -> EvalReport:
    """
    Grouped NRMSE of both controllers against the references, run by run.

    Args:
        koopman_logs: Koopman-LQR rollouts, one per run
        pid_logs: PID baseline rollouts on the same references
        references: (N, 12) reference states per run; run i's logs must have N samples
        metadata: Seeds, config hash and similar run information

    Raises:
        GridMismatchError: If counts or time grids disagree
    """
    if isinstance(koopman_logs, TrajectoryLog):
        koopman_logs = [koopman_logs]
    if isinstance(pid_logs, TrajectoryLog):
        pid_logs = [pid_logs]
    if isinstance(references, np.ndarray) and references.ndim == 2:
        references = [references]
    if not (len(koopman_logs) == len(pid_logs) == len(references)) or not koopman_logs:
        raise GridMismatchError(
            f"Run counts differ: koopman={len(koopman_logs)}, pid={len(pid_logs)}, references={len(references)}"
        )

    per_run: dict[str, list[dict[str, float]]] = {KOOPMAN: [], PID: []}
    for run, (k_log, p_log, ref) in enumerate(zip(koopman_logs, pid_logs, references)):
        _check_grid(p_log, k_log.times, f"Run {run} PID")
        if len(ref) != len(k_log):
            raise GridMismatchError(f"Run {run}: reference has {len(ref)} samples, logs have {len(k_log)}")
        per_run[KOOPMAN].append(_with_mean(grouped_nrmse(k_log.states, ref)))
        per_run[PID].append(_with_mean(grouped_nrmse(p_log.states, ref)))

    controllers = {name: _summarize(runs) for name, runs in per_run.items()}
    ratio = {
        row: controllers[KOOPMAN][row].mean / controllers[PID][row].mean
        if controllers[PID][row].mean > 0
        else float("nan")
        for row in controllers[KOOPMAN]
    }
    logger.info(
        f"Compared controllers over {len(koopman_logs)} runs: mean NRMSE koopman="
        f"{controllers[KOOPMAN][MEAN_ROW].mean:.4f}%, pid={controllers[PID][MEAN_ROW].mean:.4f}%"
    )
    return EvalReport(controllers=controllers, per_run=per_run, ratio=ratio, metadata=metadata or {})


def render_table(report: EvalReport) -> str:
    """Aligned text table: one row per state group plus the mean."""
    header = f"{'State group':<18}{'Koopman-LQR (%)':>24}{'PID (%)':>24}{'Ratio':>10}"
    lines = [header, "-" * len(header)]
    for row, label in GROUP_LABELS.items():
        koopman = report.controllers[KOOPMAN][row]
        pid = report.controllers[PID][row]
        lines.append(f"{label:<18}{str(koopman):>24}{str(pid):>24}{report.ratio.get(row, float('nan')):>10.4f}")

    if report.fit_comparison:
        lines += ["", f"{'Fit method':<18}{'Koopman-LQR mean (%)':>24}"]
        for method, stats in sorted(report.fit_comparison.items()):
            lines.append(f"{method:<18}{str(stats[MEAN_ROW]):>24}")

    if report.prediction:
        lines += ["", "Open-loop position prediction NRMSE (%)"]
        for horizon, value in report.prediction.items():
            lines.append(f"  {horizon:>6} steps: {value:.4f}")

    lines += ["", f"Runs: {report.n_runs}"]
    return "\n".join(lines) + "\n"


def plot_frame(koopman_log: TrajectoryLog, pid_log: TrajectoryLog, references: np.ndarray) -> pd.DataFrame:
    """
    Per-step plot data: step, t, then <state>_ref, <state>_koopman, <state>_pid
    for all 12 states in position, velocity, Euler angle, body rate order.

    Raises:
        GridMismatchError: If the logs and reference lengths differ
    """
    _check_grid(pid_log, koopman_log.times, "PID")
    if len(references) != len(koopman_log):
        raise GridMismatchError(f"Reference has {len(references)} samples, logs have {len(koopman_log)}")

    columns: dict[str, np.ndarray] = {
        "step": np.arange(len(koopman_log)),
        "t": koopman_log.times,
    }
    for i, name in enumerate(STATE_NAMES):
        columns[f"{name}_ref"] = references[:, i]
        columns[f"{name}_koopman"] = koopman_log.states[:, i]
        columns[f"{name}_pid"] = pid_log.states[:, i]
    return pd.DataFrame(columns)


def fit_method_summary(reports: dict[str, EvalReport]) -> dict[str, dict[str, GroupStat]]:
    """Koopman-LQR statistics keyed by fit method."""
    return {method: report.controllers[KOOPMAN] for method, report in reports.items()}
