"""Cascaded PD/PID tracking controller.

The outer loop turns position and velocity errors into a desired
acceleration, hence a total thrust and a desired attitude; the inner loop
turns attitude errors into body torques. Thrust and torques are inverted
through the rotor mixing matrix and clamped to the rotor limits.

With zero integral gains the controller is the PD used to excite the
system for data collection; with integral gains it is the PID baseline.
"""

import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.services.quadsim import (
    QuadParams,
    QuadState,
    RotorCommand,
    mixing_matrix,
    quat_to_euler,
    quat_to_rotation_matrix,
    wrap_angle,
)
from src.services.reference.helix import TrajectorySample, flat_attitude

logger = logging.getLogger(__name__)

Vector3 = tuple[float, float, float]


class PidGains(BaseModel):
    """Per-axis gains for the position and attitude loops plus output limits."""

    kp_pos: Vector3 = (4.0, 4.0, 6.0)
    ki_pos: Vector3 = (0.0, 0.0, 0.0)
    kd_pos: Vector3 = (3.0, 3.0, 4.0)
    kp_att: Vector3 = (200.0, 200.0, 60.0)
    ki_att: Vector3 = (0.0, 0.0, 0.0)
    kd_att: Vector3 = (25.0, 25.0, 15.0)
    max_tilt: float = Field(default=0.6, gt=0, description="Roll/pitch command limit, rad")
    max_rotor_thrust: float = Field(default=2.0, gt=0, description="Per-rotor thrust limit, N")
    integral_limit: float = Field(default=2.0, ge=0, description="Anti-windup bound per axis")

    @model_validator(mode="after")
    def _non_negative(self) -> "PidGains":
        for name in ("kp_pos", "ki_pos", "kd_pos", "kp_att", "ki_att", "kd_att"):
            if any(value < 0 for value in getattr(self, name)):
                raise ValueError(f"Gain {name} must be non-negative")
        return self

    @property
    def has_integral(self) -> bool:
        return any(self.ki_pos) or any(self.ki_att)


def baseline_pid_gains() -> PidGains:
    """Default PID benchmark: the collection PD plus integral action."""
    return PidGains(ki_pos=(0.5, 0.5, 1.0), ki_att=(5.0, 5.0, 2.0))


def _cascaded_command(
    x: QuadState,
    ref: TrajectorySample,
    gains: PidGains,
    params: QuadParams,
    pos_integral: np.ndarray,
    att_integral: np.ndarray,
    inverse_mixing: np.ndarray,
) -> tuple[RotorCommand, np.ndarray, np.ndarray]:
    # Outer loop: desired acceleration
    e_pos = ref.position - x.p_WB
    e_vel = ref.velocity - x.v_WB
    acc_des = (
        ref.acceleration
        + np.asarray(gains.kp_pos) * e_pos
        + np.asarray(gains.kd_pos) * e_vel
        + np.asarray(gains.ki_pos) * pos_integral
    )

    euler_des = flat_attitude(acc_des, ref.yaw, params.g)
    euler_des[0:2] = np.clip(euler_des[0:2], -gains.max_tilt, gains.max_tilt)

    force_des = params.m * (acc_des + np.array([0.0, 0.0, params.g]))
    body_z = quat_to_rotation_matrix(x.q_WB)[:, 2]
    thrust = max(float(force_des @ body_z), 0.0)

    # Inner loop: attitude PD(+I) on Euler errors, rate damping on body rates
    euler = quat_to_euler(x.q_WB)
    e_att = np.array([wrap_angle(euler_des[i] - euler[i]) for i in range(3)])
    angular_acc = (
        np.asarray(gains.kp_att) * e_att
        + np.asarray(gains.ki_att) * att_integral
        - np.asarray(gains.kd_att) * x.omega_B
    )
    torque = params.inertia * angular_acc

    raw = inverse_mixing @ np.concatenate([[thrust], torque])
    clipped = np.clip(raw, 0.0, gains.max_rotor_thrust)
    command = RotorCommand(clipped, saturated=bool(np.any(clipped != raw)))
    return command, raw, e_att


def pd_track(x: QuadState, ref: TrajectorySample, gains: PidGains, params: QuadParams) -> RotorCommand:
    """Stateless cascaded PD command (integral terms ignored)."""
    command, _, _ = _cascaded_command(
        x, ref, gains, params, np.zeros(3), np.zeros(3), np.linalg.inv(mixing_matrix(params))
    )
    return command


class CascadedPidController:
    """Stateful cascaded controller with optional integral action."""

    def __init__(self, gains: PidGains, params: QuadParams, dt: float):
        """Initialize the controller for a fixed control period."""
        self.gains = gains
        self.params = params
        self.dt = dt
        self._inverse_mixing = np.linalg.inv(mixing_matrix(params))
        self.saturated_steps = 0
        self.reset()

    def reset(self) -> None:
        """Zero the integrators and saturation counter."""
        self._pos_integral = np.zeros(3)
        self._att_integral = np.zeros(3)
        self.saturated_steps = 0

    def __call__(self, x: QuadState, ref: TrajectorySample) -> tuple[RotorCommand, np.ndarray]:
        command, raw, e_att = _cascaded_command(
            x,
            ref,
            self.gains,
            self.params,
            self._pos_integral,
            self._att_integral,
            self._inverse_mixing,
        )
        if command.saturated:
            self.saturated_steps += 1

        if self.gains.has_integral:
            limit = self.gains.integral_limit
            self._pos_integral = np.clip(
                self._pos_integral + (ref.position - x.p_WB) * self.dt, -limit, limit
            )
            self._att_integral = np.clip(self._att_integral + e_att * self.dt, -limit, limit)

        return command, raw


class PerturbedController:
    """
    Tracking controller with seeded Gaussian noise on the rotor commands.

    Used only to excite the plant while collecting identification data: the
    noise decorrelates the inputs from the state so the regressors stay well
    conditioned. Perturbed commands are clipped to the rotor limits.
    """

    def __init__(self, controller: CascadedPidController, noise_std: float, seed: int):
        """Wrap a controller; noise_std is the per-rotor standard deviation in N."""
        if noise_std < 0:
            raise ValueError(f"noise_std must be non-negative, got {noise_std}")
        self.controller = controller
        self.noise_std = noise_std
        self._rng = np.random.default_rng(seed)

    def __call__(self, x: QuadState, ref: TrajectorySample) -> tuple[RotorCommand, np.ndarray]:
        command, raw = self.controller(x, ref)
        if self.noise_std == 0:
            return command, raw
        perturbed = command.thrusts + self._rng.normal(0.0, self.noise_std, size=command.thrusts.shape)
        limit = self.controller.gains.max_rotor_thrust
        clipped = np.clip(perturbed, 0.0, limit)
        saturated = command.saturated or bool(np.any(clipped != perturbed))
        return RotorCommand(clipped, saturated=saturated), raw + (perturbed - command.thrusts)
