"""Koopman identification: lifting, EDMD regression and linear prediction.

Key Components:
- LiftingDictionary, lift: observable dictionary (dedup / literal / identity)
- SnapshotDataset, TrajectoryLog: snapshot matrices from simulated rollouts
- assemble, check_rank, fit_ls, fit_tls, dmdc: operator regression
- LiftedModel, predict: identified (A, B, C) and open-loop rollout
"""

from .lifting import DEFAULT_DICTIONARY, LiftingDictionary, LiftMode, OmegaFrame, lift
from .model import LiftedModel, ModelEnvelope, predict
from .regression import (
    LiftedSnapshots,
    RankReport,
    assemble,
    check_rank,
    dmdc,
    fit_ls,
    fit_tls,
    identify,
    rank_report,
    svd_cutoff,
    truncated_pinv,
)
from .snapshots import SnapshotDataset, TrajectoryLog

__all__ = [
    "DEFAULT_DICTIONARY",
    "LiftMode",
    "LiftedModel",
    "LiftedSnapshots",
    "LiftingDictionary",
    "ModelEnvelope",
    "OmegaFrame",
    "RankReport",
    "SnapshotDataset",
    "TrajectoryLog",
    "assemble",
    "check_rank",
    "dmdc",
    "fit_ls",
    "fit_tls",
    "identify",
    "lift",
    "predict",
    "rank_report",
    "svd_cutoff",
    "truncated_pinv",
]
