"""Rigid-body quadrotor dynamics with quaternion attitude and RK4 integration.

The simulation state is 13-dimensional,

    x = [p_WB (3), v_WB (3), q_WB (4, scalar-first), omega_B (3)],

and the analysis state handed to identification is the 12-dimensional Euler
form [p (3), v (3), (roll, pitch, yaw), omega_B (3)].
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.exceptions import ValidationError
from src.services.quadsim.quaternion import (
    euler_to_quat,
    quat_mul,
    quat_to_euler,
    rotate_vector,
)

logger = logging.getLogger(__name__)

STATE_DIM = 13
ANALYSIS_DIM = 12
INPUT_DIM = 4


class QuadParams(BaseModel):
    """Physical parameters of the quadrotor."""

    model_config = ConfigDict(frozen=True)

    m: float = Field(default=0.18, gt=0, description="Mass, kg")
    g: float = Field(default=9.81, gt=0, description="Gravity magnitude, m/s^2")
    J: tuple[float, float, float] = Field(
        default=(0.00025, 0.000232, 0.0003738),
        description="Diagonal inertia (Jxx, Jyy, Jzz), kg m^2",
    )
    l: float = Field(default=0.086, gt=0, description="Moment arm, m")  # noqa: E741
    # typical small-quadrotor value
    c_tau: float = Field(default=0.01, gt=0, description="Rotor drag-torque coefficient, m")

    @field_validator("J")
    @classmethod
    def _positive_inertia(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(j <= 0 for j in value):
            raise ValueError(f"Inertia entries must be positive, got {value}")
        return value

    @property
    def inertia(self) -> np.ndarray:
        return np.asarray(self.J, dtype=float)

    @property
    def gravity_world(self) -> np.ndarray:
        return np.array([0.0, 0.0, -self.g])

    @property
    def hover_thrust(self) -> float:
        """Per-rotor thrust balancing gravity."""
        return self.m * self.g / 4.0


@dataclass(frozen=True)
class QuadState:
    """Quaternion-attitude simulation state of one quadrotor."""

    p_WB: np.ndarray
    v_WB: np.ndarray
    q_WB: np.ndarray
    omega_B: np.ndarray

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "QuadState":
        x = np.asarray(x, dtype=float)
        if x.shape != (STATE_DIM,):
            raise ValidationError(f"Expected a {STATE_DIM}-vector, got shape {x.shape}")
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:10].copy(), x[10:13].copy())

    @classmethod
    def from_analysis_vector(cls, x: np.ndarray) -> "QuadState":
        """Build a simulation state from the 12-dim Euler analysis state."""
        x = np.asarray(x, dtype=float)
        if x.shape != (ANALYSIS_DIM,):
            raise ValidationError(f"Expected a {ANALYSIS_DIM}-vector, got shape {x.shape}")
        return cls(x[0:3].copy(), x[3:6].copy(), euler_to_quat(x[6:9]), x[9:12].copy())

    @classmethod
    def at_rest(cls, position: np.ndarray) -> "QuadState":
        return cls(
            np.asarray(position, dtype=float).copy(),
            np.zeros(3),
            np.array([1.0, 0.0, 0.0, 0.0]),
            np.zeros(3),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p_WB, self.v_WB, self.q_WB, self.omega_B])

    def to_analysis_vector(self) -> np.ndarray:
        return np.concatenate([self.p_WB, self.v_WB, quat_to_euler(self.q_WB), self.omega_B])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


@dataclass(frozen=True)
class RotorCommand:
    """Four individual rotor thrusts in newtons."""

    thrusts: np.ndarray
    saturated: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        thrusts = np.asarray(self.thrusts, dtype=float)
        if thrusts.shape != (INPUT_DIM,):
            raise ValidationError(f"Expected {INPUT_DIM} rotor thrusts, got shape {thrusts.shape}")
        if not np.all(np.isfinite(thrusts)):
            raise ValidationError(f"Rotor thrusts must be finite, got {thrusts}")
        if np.any(thrusts < 0):
            raise ValidationError(f"Rotor thrusts must be non-negative, got {thrusts}")
        object.__setattr__(self, "thrusts", thrusts)

    @classmethod
    def from_raw(cls, raw: np.ndarray, warn: bool = True) -> "RotorCommand":
        """Clamp negative thrust requests to zero; rotors cannot pull."""
        raw = np.asarray(raw, dtype=float)
        if not np.all(np.isfinite(raw)):
            raise ValidationError(f"Rotor thrust request is not finite: {raw}")
        saturated = bool(np.any(raw < 0))
        if saturated and warn:
            logger.warning(f"Clamping negative rotor thrust request {raw} to zero")
        return cls(np.maximum(raw, 0.0), saturated=saturated)


def hover_command(params: QuadParams) -> RotorCommand:
    """Equal rotor thrusts summing to m*g."""
    return RotorCommand(np.full(INPUT_DIM, params.hover_thrust))


def mixing_matrix(params: QuadParams) -> np.ndarray:
    """4x4 map from rotor thrusts to (total thrust, tau_x, tau_y, tau_z)."""
    arm, c = params.l, params.c_tau
    return np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [-arm, -arm, arm, arm],
            [-arm, arm, arm, -arm],
            [-c, c, -c, c],
        ]
    )


def mix_rotors(u: RotorCommand, params: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """
    Map rotor thrusts to body thrust and torque.

    Returns:
        (T_B, tau_B): body-frame thrust vector (N) and torque vector (N m)
    """
    T0, T1, T2, T3 = u.thrusts
    T_B = np.array([0.0, 0.0, T0 + T1 + T2 + T3])
    tau_B = np.array(
        [
            params.l * (-T0 - T1 + T2 + T3),
            params.l * (-T0 + T1 + T2 - T3),
            params.c_tau * (-T0 + T1 - T2 + T3),
        ]
    )
    return T_B, tau_B


def _derivative(x: np.ndarray, T_B: np.ndarray, tau_B: np.ndarray, params: QuadParams) -> np.ndarray:
    v = x[3:6]
    q = x[6:10]
    omega = x[10:13]
    J = params.inertia

    # RK4 stages leave the unit sphere slightly; rotate with the normalized quaternion
    q_unit = q / np.linalg.norm(q)
    v_dot = rotate_vector(q_unit, T_B) / params.m + params.gravity_world
    q_dot = 0.5 * quat_mul(q, np.array([0.0, omega[0], omega[1], omega[2]]))
    omega_dot = (tau_B - np.cross(omega, J * omega)) / J

    return np.concatenate([v, v_dot, q_dot, omega_dot])


def dynamics_rhs(x: QuadState, u: RotorCommand, params: QuadParams) -> np.ndarray:
    """Continuous-time state derivative f(x, u) as a 13-vector."""
    T_B, tau_B = mix_rotors(u, params)
    return _derivative(x.to_vector(), T_B, tau_B, params)


def rk4_step_vector(x: np.ndarray, u: RotorCommand, dt: float, params: QuadParams) -> np.ndarray:
    """Classic RK4 on the flat 13-vector with zero-order hold on u."""
    T_B, tau_B = mix_rotors(u, params)
    k1 = _derivative(x, T_B, tau_B, params)
    k2 = _derivative(x + 0.5 * dt * k1, T_B, tau_B, params)
    k3 = _derivative(x + 0.5 * dt * k2, T_B, tau_B, params)
    k4 = _derivative(x + dt * k3, T_B, tau_B, params)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    x_next[6:10] /= np.linalg.norm(x_next[6:10])
    return x_next


def rk4_step(x: QuadState, u: RotorCommand, dt: float, params: QuadParams) -> QuadState:
    """
    Advance the state by one RK4 step of length dt.

    Raises:
        ValidationError: If dt is not positive
    """
    if dt <= 0:
        raise ValidationError(f"Time step must be positive, got {dt}")
    return QuadState.from_vector(rk4_step_vector(x.to_vector(), u, dt, params))


def mechanical_energy(x: QuadState, params: QuadParams) -> float:
    """Translational kinetic plus potential energy, J."""
    return 0.5 * params.m * float(x.v_WB @ x.v_WB) + params.m * params.g * float(x.p_WB[2])
