"""Snapshot matrices assembled from simulated trajectories."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.core.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass
class TrajectoryLog:
    """Per-sample record of one simulated rollout.

    `states` holds the 12-dim Euler analysis state; `sim_states` keeps the
    13-dim quaternion state when the log comes straight from the simulator.
    `references` holds the 12-dim reference states for closed-loop rollouts.
    Row k of `inputs` is the command applied between samples k and k+1.
    """

    traj_id: int
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    raw_inputs: Optional[np.ndarray] = None
    sim_states: Optional[np.ndarray] = None
    references: Optional[np.ndarray] = None
    saturated_steps: int = 0
    diverged_at: Optional[int] = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n_pairs(self) -> int:
        return max(len(self) - 1, 0)


@dataclass
class SnapshotDataset:
    """Column-aligned snapshot matrices X, X_plus and inputs Gamma.

    Column k of X_plus is the one-step successor of column k of X within the
    same trajectory; `traj_ids` labels each column.
    """

    X: np.ndarray
    X_plus: np.ndarray
    Gamma: np.ndarray
    traj_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self) -> None:
        if self.traj_ids.size == 0:
            self.traj_ids = np.zeros(self.X.shape[1], dtype=int)
        columns = {self.X.shape[1], self.X_plus.shape[1], self.Gamma.shape[1], self.traj_ids.size}
        if len(columns) != 1:
            raise ValidationError(
                f"Snapshot column counts differ: X={self.X.shape}, X_plus={self.X_plus.shape}, "
                f"Gamma={self.Gamma.shape}, traj_ids={self.traj_ids.shape}"
            )
        if self.X.shape[0] != self.X_plus.shape[0]:
            raise ValidationError(f"X and X_plus row counts differ: {self.X.shape} vs {self.X_plus.shape}")

    @property
    def n_states(self) -> int:
        return self.X.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.Gamma.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.X.shape[1]

    def pairs_per_trajectory(self) -> dict[int, int]:
        ids, counts = np.unique(self.traj_ids, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}

    @classmethod
    def from_logs(cls, logs: Sequence[TrajectoryLog]) -> "SnapshotDataset":
        """
        Stack logs column-wise without letting a pair span two trajectories.

        Raises:
            ValidationError: If no log contributes a snapshot pair
        """
        usable = [log for log in logs if log.n_pairs > 0]
        if not usable:
            raise ValidationError("No trajectory log contains a snapshot pair")

        X = np.hstack([log.states[:-1].T for log in usable])
        X_plus = np.hstack([log.states[1:].T for log in usable])
        Gamma = np.hstack([log.inputs[:-1].T for log in usable])
        traj_ids = np.concatenate([np.full(log.n_pairs, log.traj_id, dtype=int) for log in usable])

        logger.info(f"Assembled {X.shape[1]} snapshot pairs from {len(usable)} trajectories")
        return cls(X=X, X_plus=X_plus, Gamma=Gamma, traj_ids=traj_ids)
