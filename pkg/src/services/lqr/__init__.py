"""Lifted-space LQR: padded weights, Riccati solution and closed-loop tracking."""

from .closed_loop import (
    design_lifted_lqr,
    feedforward_command,
    koopman_lqr_control,
    lqr_request,
    rollout_closed_loop,
)
from .riccati import (
    GainEnvelope,
    LqrGain,
    LqrWeights,
    dare_residual,
    lqr_gain,
    pad_Q,
    refine_dare,
    solve_dare,
)

__all__ = [
    "GainEnvelope",
    "LqrGain",
    "LqrWeights",
    "dare_residual",
    "design_lifted_lqr",
    "feedforward_command",
    "koopman_lqr_control",
    "lqr_gain",
    "lqr_request",
    "pad_Q",
    "refine_dare",
    "rollout_closed_loop",
    "solve_dare",
]
