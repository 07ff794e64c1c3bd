"""Quadrotor rigid-body simulation.

Key Components:
- QuadParams, QuadState, RotorCommand: simulation domain types
- mix_rotors, dynamics_rhs, rk4_step: continuous dynamics and discretization
- quaternion helpers: Hamilton product, rotations, ZYX Euler conversion
"""

from .dynamics import (
    ANALYSIS_DIM,
    INPUT_DIM,
    STATE_DIM,
    QuadParams,
    QuadState,
    RotorCommand,
    dynamics_rhs,
    hover_command,
    mechanical_energy,
    mix_rotors,
    mixing_matrix,
    rk4_step,
    rk4_step_vector,
)
from .quaternion import (
    euler_to_quat,
    euler_to_rotation_matrix,
    quat_conjugate,
    quat_mul,
    quat_to_euler,
    quat_to_rotation_matrix,
    rotate_vector,
    skew,
    wrap_angle,
)

__all__ = [
    "ANALYSIS_DIM",
    "INPUT_DIM",
    "STATE_DIM",
    "QuadParams",
    "QuadState",
    "RotorCommand",
    "dynamics_rhs",
    "euler_to_quat",
    "euler_to_rotation_matrix",
    "hover_command",
    "mechanical_energy",
    "mix_rotors",
    "mixing_matrix",
    "quat_conjugate",
    "quat_mul",
    "quat_to_euler",
    "quat_to_rotation_matrix",
    "rk4_step",
    "rk4_step_vector",
    "rotate_vector",
    "skew",
    "wrap_angle",
]
