"""Artifact persistence: dataset and rollout CSVs, model and gain JSON.

Every CSV starts with one comment line carrying the config hash and seed;
JSON artifacts carry both in their metadata.
"""

import json
import logging
import re
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError as PydanticValidationError

from src.core.exceptions import ValidationError
from src.services.koopman import LiftedModel, TrajectoryLog
from src.services.koopman.lifting import STATE_NAMES
from src.services.lqr import GainEnvelope, LqrGain
from src.services.quadsim import INPUT_DIM

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
INPUT_COLUMNS = [f"u{i}" for i in range(INPUT_DIM)]
RAW_INPUT_COLUMNS = [f"u{i}_raw" for i in range(INPUT_DIM)]
REFERENCE_COLUMNS = [f"{name}_ref" for name in STATE_NAMES]
DATASET_COLUMNS = ["t", *STATE_NAMES, *INPUT_COLUMNS, "traj_id"]
ROLLOUT_COLUMNS = [
    "run",
    "controller",
    "step",
    "t",
    *STATE_NAMES,
    *REFERENCE_COLUMNS,
    *INPUT_COLUMNS,
    *RAW_INPUT_COLUMNS,
]

_HEADER_PATTERN = re.compile(r"^# config_hash=(?P<hash>[0-9a-f]*) seed=(?P<seed>-?\d+)$")


def header_line(config_hash: str, seed: int) -> str:
    return f"# config_hash={config_hash} seed={seed}\n"


def read_header(path: str | Path) -> tuple[str, int]:
    """
    Config hash and seed from the first line of an artifact file.

    Raises:
        ValidationError: If the first line is not a provenance comment
    """
    with open(path, encoding="utf-8") as handle:
        first = handle.readline().rstrip("\n")
    match = _HEADER_PATTERN.match(first)
    if not match:
        raise ValidationError(f"{path} does not start with a config hash line")
    return match.group("hash"), int(match.group("seed"))


def write_frame(frame: pd.DataFrame, path: str | Path, config_hash: str, seed: int) -> Path:
    """Write a frame as CSV under the provenance comment line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(header_line(config_hash, seed))
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def read_frame(path: str | Path, columns: Iterable[str]) -> pd.DataFrame:
    """
    Read an artifact CSV and check that it has the expected columns.

    Raises:
        ValidationError: If the file is missing or columns are absent
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Artifact not found: {path}")
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path} is missing columns {missing}")
    return frame


def dataset_frame(logs: Iterable[TrajectoryLog]) -> pd.DataFrame:
    """One row per sample: t, 12 states, 4 inputs, traj_id."""
    frames = []
    for log in logs:
        frame = pd.DataFrame(log.states, columns=STATE_NAMES)
        frame.insert(0, "t", log.times)
        frame[INPUT_COLUMNS] = log.inputs
        frame["traj_id"] = log.traj_id
        frames.append(frame)
    if not frames:
        raise ValidationError("No trajectory logs to write")
    return pd.concat(frames, ignore_index=True)[DATASET_COLUMNS]


def write_dataset(logs: Iterable[TrajectoryLog], path: str | Path, config_hash: str, seed: int) -> Path:
    return write_frame(dataset_frame(logs), path, config_hash, seed)


def read_dataset(path: str | Path) -> list[TrajectoryLog]:
    """Rebuild per-trajectory logs from a dataset CSV, in file order."""
    frame = read_frame(path, DATASET_COLUMNS)
    logs = []
    for traj_id, group in frame.groupby("traj_id", sort=False):
        logs.append(
            TrajectoryLog(
                traj_id=int(traj_id),
                times=group["t"].to_numpy(dtype=float),
                states=group[STATE_NAMES].to_numpy(dtype=float),
                inputs=group[INPUT_COLUMNS].to_numpy(dtype=float),
            )
        )
    logger.info(f"Loaded {len(logs)} trajectories from {path}")
    return logs


def rollout_frame(run: int, controller: str, log: TrajectoryLog) -> pd.DataFrame:
    if log.references is None:
        raise ValidationError(f"Rollout log for {controller} run {run} has no references")
    frame = pd.DataFrame(log.states, columns=STATE_NAMES)
    frame.insert(0, "t", log.times)
    frame.insert(0, "step", np.arange(len(log)))
    frame.insert(0, "controller", controller)
    frame.insert(0, "run", run)
    frame[REFERENCE_COLUMNS] = log.references
    frame[INPUT_COLUMNS] = log.inputs
    frame[RAW_INPUT_COLUMNS] = log.raw_inputs if log.raw_inputs is not None else log.inputs
    return frame[ROLLOUT_COLUMNS]


def write_rollouts(
    rollouts: Iterable[tuple[int, str, TrajectoryLog]], path: str | Path, config_hash: str, seed: int
) -> Path:
    frames = [rollout_frame(run, controller, log) for run, controller, log in rollouts]
    if not frames:
        raise ValidationError("No rollouts to write")
    return write_frame(pd.concat(frames, ignore_index=True), path, config_hash, seed)


def read_rollouts(path: str | Path) -> dict[tuple[int, str], TrajectoryLog]:
    """Rollout logs keyed by (run, controller)."""
    frame = read_frame(path, ROLLOUT_COLUMNS)
    logs: dict[tuple[int, str], TrajectoryLog] = {}
    for (run, controller), group in frame.groupby(["run", "controller"], sort=False):
        logs[(int(run), str(controller))] = TrajectoryLog(
            traj_id=int(run),
            times=group["t"].to_numpy(dtype=float),
            states=group[STATE_NAMES].to_numpy(dtype=float),
            inputs=group[INPUT_COLUMNS].to_numpy(dtype=float),
            raw_inputs=group[RAW_INPUT_COLUMNS].to_numpy(dtype=float),
            references=group[REFERENCE_COLUMNS].to_numpy(dtype=float),
        )
    return logs


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    return path


def save_model(model: LiftedModel, path: str | Path, config_hash: str, seed: int) -> Path:
    model.metadata.update({"config_hash": config_hash, "seed": seed})
    return write_text(model.to_json(), path)


def load_model(path: str | Path) -> LiftedModel:
    """
    Raises:
        ValidationError: If the file is missing or not a model envelope
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Model file not found: {path}")
    try:
        return LiftedModel.from_json(path.read_text(encoding="utf-8"))
    except PydanticValidationError as e:
        raise ValidationError(f"{path} is not a valid model file: {e}") from e


def save_gain(envelope: GainEnvelope, path: str | Path) -> Path:
    return write_text(json.dumps(envelope.model_dump(), indent=2), path)


def load_gain(path: str | Path) -> tuple[LqrGain, GainEnvelope]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Gain file not found: {path}")
    try:
        envelope = GainEnvelope.model_validate_json(path.read_text(encoding="utf-8"))
    except PydanticValidationError as e:
        raise ValidationError(f"{path} is not a valid gain file: {e}") from e
    return LqrGain.from_envelope(envelope), envelope


def write_json(payload: str, path: str | Path, config_hash: Optional[str] = None) -> Path:
    """Write a JSON document, checking it parses and carries the expected hash when given."""
    document = json.loads(payload)
    if config_hash is not None and document.get("metadata", {}).get("config_hash") != config_hash:
        raise ValidationError(f"JSON artifact for {path} does not carry config hash {config_hash}")
    return write_text(payload, path)
