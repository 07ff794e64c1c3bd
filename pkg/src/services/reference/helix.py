"""Helical reference trajectories and the 12-dim reference states derived from them."""

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field

from src.core.exceptions import ValidationError
from src.services.quadsim import ANALYSIS_DIM, QuadParams

logger = logging.getLogger(__name__)


class HelixSpec(BaseModel):
    """Parameters of one helical reference."""

    radius: float = Field(default=1.0, ge=0, description="Helix radius, m")
    total_height: float = Field(default=1.0, description="Climb over the whole duration, m")
    duration: float = Field(default=30.0, description="Trajectory length, s")
    dt: float = Field(default=0.01, description="Sample spacing, s")
    angular_rate: float = Field(default=0.5, description="Angular rate around the axis, rad/s")
    center: tuple[float, float, float] = Field(default=(0.0, 0.0, 0.0), description="Helix axis origin, m")
    seed: int = Field(default=0, description="Per-trajectory seed")


class HelixDefaults(BaseModel):
    """Distribution of randomized helices used for data collection."""

    count: int = Field(default=5, ge=1)
    radius_range: tuple[float, float] = (1.0, 5.0)
    height_range: tuple[float, float] = (1.0, 6.0)
    duration: float = Field(default=30.0, gt=0)
    dt: float = Field(default=0.01, gt=0)
    angular_rate: float = 0.5
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TrajectorySample:
    """Reference values at one grid index."""

    index: int
    t: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    yaw: float


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled position/velocity/yaw reference."""

    timestamps: np.ndarray
    ref_position: np.ndarray
    ref_velocity: np.ndarray
    ref_acceleration: np.ndarray
    ref_yaw: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def dt(self) -> float:
        return float(self.timestamps[1] - self.timestamps[0]) if len(self) > 1 else 0.0

    def sample(self, index: int) -> TrajectorySample:
        return TrajectorySample(
            index=index,
            t=float(self.timestamps[index]),
            position=self.ref_position[index],
            velocity=self.ref_velocity[index],
            acceleration=self.ref_acceleration[index],
            yaw=float(self.ref_yaw[index]),
        )

    def window(self, start: int, steps: int) -> "Trajectory":
        """Sub-trajectory of steps + 1 samples starting at `start`."""
        stop = start + steps + 1
        if start < 0 or stop > len(self):
            raise ValidationError(
                f"Window [{start}, {stop}) exceeds trajectory of {len(self)} samples"
            )
        return Trajectory(
            timestamps=self.timestamps[start:stop],
            ref_position=self.ref_position[start:stop],
            ref_velocity=self.ref_velocity[start:stop],
            ref_acceleration=self.ref_acceleration[start:stop],
            ref_yaw=self.ref_yaw[start:stop],
        )


def gen_helix(spec: HelixSpec) -> Trajectory:
    """
    Sample a helix p(t) = c + (r cos wt, r sin wt, (h / T) t).

    Velocity and acceleration are the analytic derivatives; yaw is held at zero.

    Raises:
        ValidationError: If dt or duration is not positive
    """
    if spec.dt <= 0:
        raise ValidationError(f"Helix dt must be positive, got {spec.dt}")
    if spec.duration <= 0:
        raise ValidationError(f"Helix duration must be positive, got {spec.duration}")

    n_samples = int(round(spec.duration / spec.dt)) + 1
    t = np.arange(n_samples) * spec.dt
    r, w = spec.radius, spec.angular_rate
    climb = spec.total_height / spec.duration
    center = np.asarray(spec.center, dtype=float)

    cos_wt, sin_wt = np.cos(w * t), np.sin(w * t)
    position = np.column_stack([r * cos_wt, r * sin_wt, climb * t]) + center
    velocity = np.column_stack([-r * w * sin_wt, r * w * cos_wt, np.full(n_samples, climb)])
    acceleration = np.column_stack([-r * w * w * cos_wt, -r * w * w * sin_wt, np.zeros(n_samples)])

    logger.debug(f"Generated helix r={r:.3f} h={spec.total_height:.3f} with {n_samples} samples")
    return Trajectory(
        timestamps=t,
        ref_position=position,
        ref_velocity=velocity,
        ref_acceleration=acceleration,
        ref_yaw=np.zeros(n_samples),
    )


def sample_random_specs(n: int, seed: int, defaults: HelixDefaults | None = None) -> list[HelixSpec]:
    """
    Draw n helix specs with uniform radius and height.

    The root seed drives the parameter draws and is split into one child
    seed per trajectory, so results are reproducible for a fixed seed.
    """
    if n < 1:
        raise ValidationError(f"Need at least one helix, got n={n}")
    defaults = defaults or HelixDefaults()

    rng = np.random.default_rng(seed)
    radii = rng.uniform(*defaults.radius_range, size=n)
    heights = rng.uniform(*defaults.height_range, size=n)
    child_seeds = [
        int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(n)
    ]

    return [
        HelixSpec(
            radius=float(radii[i]),
            total_height=float(heights[i]),
            duration=defaults.duration,
            dt=defaults.dt,
            angular_rate=defaults.angular_rate,
            center=defaults.center,
            seed=child_seeds[i],
        )
        for i in range(n)
    ]


def flat_attitude(acceleration: np.ndarray, yaw: np.ndarray, g: float) -> np.ndarray:
    """
    Roll/pitch/yaw that align body z with the thrust needed for `acceleration`.

    Accepts (3,) + scalar or (T, 3) + (T,); returns (3,) or (T, 3).
    """
    acc = np.asarray(acceleration, dtype=float)
    single = acc.ndim == 1
    acc = np.atleast_2d(acc)
    yaw = np.atleast_1d(np.asarray(yaw, dtype=float))

    force = acc + np.array([0.0, 0.0, g])
    z_b = force / np.linalg.norm(force, axis=1, keepdims=True)
    x_c = np.column_stack([np.cos(yaw), np.sin(yaw), np.zeros_like(yaw)])
    y_b = np.cross(z_b, x_c)
    y_b /= np.linalg.norm(y_b, axis=1, keepdims=True)
    x_b = np.cross(y_b, z_b)

    roll = np.arctan2(y_b[:, 2], z_b[:, 2])
    pitch = np.arcsin(np.clip(-x_b[:, 2], -1.0, 1.0))
    heading = np.arctan2(x_b[:, 1], x_b[:, 0])
    euler = np.column_stack([roll, pitch, heading])
    return euler[0] if single else euler


def euler_rates_to_body(euler: np.ndarray, euler_dot: np.ndarray) -> np.ndarray:
    """Body angular rates from ZYX Euler angles and their time derivatives, (T, 3)."""
    roll, pitch = euler[:, 0], euler[:, 1]
    droll, dpitch, dyaw = euler_dot[:, 0], euler_dot[:, 1], euler_dot[:, 2]
    return np.column_stack(
        [
            droll - dyaw * np.sin(pitch),
            dpitch * np.cos(roll) + dyaw * np.cos(pitch) * np.sin(roll),
            -dpitch * np.sin(roll) + dyaw * np.cos(pitch) * np.cos(roll),
        ]
    )


def reference_states(trajectory: Trajectory, params: QuadParams) -> np.ndarray:
    """
    12-dim reference states (N, 12) along a trajectory.

    Attitude follows the thrust direction demanded by the reference
    acceleration; body rates come from the Euler-rate kinematics of that
    attitude.
    """
    euler = flat_attitude(trajectory.ref_acceleration, trajectory.ref_yaw, params.g)
    euler = np.atleast_2d(euler)
    if len(trajectory) > 2:
        euler_dot = np.gradient(np.unwrap(euler, axis=0), trajectory.dt, axis=0, edge_order=2)
    else:
        euler_dot = np.zeros_like(euler)
    omega = euler_rates_to_body(euler, euler_dot)

    states = np.empty((len(trajectory), ANALYSIS_DIM))
    states[:, 0:3] = trajectory.ref_position
    states[:, 3:6] = trajectory.ref_velocity
    states[:, 6:9] = euler
    states[:, 9:12] = omega
    return states
