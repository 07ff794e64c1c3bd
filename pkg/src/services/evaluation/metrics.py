"""Normalized RMSE metrics for tracking and prediction."""

import logging
from typing import Sequence

import numpy as np

from src.core.exceptions import MetricUndefinedError, ValidationError
from src.services.koopman import LiftedModel, TrajectoryLog, predict
from src.services.quadsim import ANALYSIS_DIM

logger = logging.getLogger(__name__)

STATE_GROUPS: dict[str, slice] = {
    "position": slice(0, 3),
    "velocity": slice(3, 6),
    "euler": slice(6, 9),
    "angular_velocity": slice(9, 12),
}
ANGLE_GROUP = "euler"


def nrmse(x_pred: np.ndarray, x_true: np.ndarray) -> float:
    """
    100 * ||x_pred - x_true|| / ||x_true|| over the flattened sequences.

    Raises:
        ValidationError: If the sequences are empty or differ in shape
        MetricUndefinedError: If x_true is identically zero
    """
    x_pred = np.asarray(x_pred, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_pred.shape != x_true.shape:
        raise ValidationError(f"Shapes differ: {x_pred.shape} vs {x_true.shape}")
    if x_true.size == 0:
        raise ValidationError("NRMSE needs at least one sample")

    denominator = float(np.sum(x_true**2))
    if denominator == 0.0:
        raise MetricUndefinedError("NRMSE undefined: reference sequence has zero norm")
    return 100.0 * float(np.sqrt(np.sum((x_pred - x_true) ** 2) / denominator))


def _wrapped(x_pred: np.ndarray, x_true: np.ndarray) -> np.ndarray:
    # angle errors taken on (-pi, pi]
    return x_true + np.angle(np.exp(1j * (x_pred - x_true)))


def grouped_nrmse(states: np.ndarray, references: np.ndarray) -> dict[str, float]:
    """
    NRMSE per state group of (N, 12) state and reference sequences.

    A group whose reference is identically zero is reported as NaN.
    """
    states = np.asarray(states, dtype=float)
    references = np.asarray(references, dtype=float)
    if states.shape != references.shape or states.ndim != 2 or states.shape[1] != ANALYSIS_DIM:
        raise ValidationError(
            f"Expected matching (N, {ANALYSIS_DIM}) arrays, got {states.shape} and {references.shape}"
        )

    result: dict[str, float] = {}
    for group, columns in STATE_GROUPS.items():
        pred, true = states[:, columns], references[:, columns]
        if group == ANGLE_GROUP:
            pred = _wrapped(pred, true)
        try:
            result[group] = nrmse(pred, true)
        except MetricUndefinedError:
            logger.warning(f"NRMSE undefined for group '{group}': zero reference")
            result[group] = float("nan")
    return result


def prediction_window(
    model: LiftedModel, log: TrajectoryLog, start: int, steps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Open-loop prediction from log sample `start` driven by the logged inputs, with the truth."""
    if start < 0 or start + steps > len(log) - 1:
        raise ValidationError(f"Window [{start}, {start + steps}] exceeds log of {len(log)} samples")
    predicted = predict(model, log.states[start], log.inputs[start : start + steps], steps)
    return predicted, log.states[start : start + steps + 1]


def multi_step_prediction_errors(
    model: LiftedModel,
    logs: Sequence[TrajectoryLog],
    horizons: Sequence[int],
    starts: Sequence[int] = (0,),
    group: str = "position",
) -> dict[int, float]:
    """
    Mean NRMSE of one state group for open-loop predictions over each horizon.

    Windows that do not fit in a log are skipped; a horizon without any
    window maps to NaN.
    """
    columns = STATE_GROUPS[group]
    errors: dict[int, float] = {}
    for horizon in horizons:
        values = []
        for log in logs:
            for start in starts:
                if start + horizon > len(log) - 1:
                    continue
                predicted, truth = prediction_window(model, log, start, horizon)
                if group == ANGLE_GROUP:
                    predicted = predicted.copy()
                    predicted[:, columns] = _wrapped(predicted[:, columns], truth[:, columns])
                values.append(nrmse(predicted[:, columns], truth[:, columns]))
        errors[horizon] = float(np.mean(values)) if values else float("nan")
        logger.info(f"{horizon}-step {group} prediction NRMSE: {errors[horizon]:.4f}% over {len(values)} windows")
    return errors
