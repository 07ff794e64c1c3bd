"""Quaternion and attitude utilities.

Conventions used throughout the toolkit:
- Quaternions are scalar-first Hamilton quaternions (w, x, y, z).
- A unit quaternion q maps body-frame vectors into the world frame,
  v_W = q v_B q*.
- Euler angles are ZYX intrinsic (yaw, then pitch, then roll) and are
  returned as (roll, pitch, yaw).
"""

import logging
import math

import numpy as np

from src.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-6
GIMBAL_LOCK_TOLERANCE = 1e-6


def quat_mul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product q1 ⊗ q2 of two scalar-first quaternions."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    """Conjugate (inverse for unit quaternions)."""
    return np.array([q[0], -q[1], -q[2], -q[3]])


def _require_unit(q: np.ndarray, tolerance: float = UNIT_NORM_TOLERANCE) -> None:
    deviation = abs(float(np.linalg.norm(q)) - 1.0)
    if deviation > tolerance:
        raise ValidationError(f"Quaternion is not unit length (norm deviation {deviation:.3e})")


def rotate_vector(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Rotate a 3-vector by a unit quaternion, returning q v q*.

    Raises:
        ValidationError: If q deviates from unit norm by more than 1e-6
    """
    _require_unit(q)
    qv = np.array([0.0, v[0], v[1], v[2]])
    return quat_mul(quat_mul(q, qv), quat_conjugate(q))[1:]


def quat_to_rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Body-to-world rotation matrix R(q) for a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def euler_to_rotation_matrix(euler: np.ndarray) -> np.ndarray:
    """
    ZYX rotation matrices R = Rz(yaw) Ry(pitch) Rx(roll).

    Accepts a single (3,) angle triple or a stack of shape (T, 3); returns
    (3, 3) or (T, 3, 3) respectively.
    """
    euler = np.asarray(euler, dtype=float)
    single = euler.ndim == 1
    angles = np.atleast_2d(euler)
    cr, sr = np.cos(angles[:, 0]), np.sin(angles[:, 0])
    cp, sp = np.cos(angles[:, 1]), np.sin(angles[:, 1])
    cy, sy = np.cos(angles[:, 2]), np.sin(angles[:, 2])

    R = np.empty((angles.shape[0], 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return R[0] if single else R


def skew(v: np.ndarray) -> np.ndarray:
    """
    Cross-product matrix: skew(a) @ b == a × b.

    Accepts (3,) or (T, 3) input.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    w = np.atleast_2d(v)
    S = np.zeros((w.shape[0], 3, 3))
    S[:, 0, 1] = -w[:, 2]
    S[:, 0, 2] = w[:, 1]
    S[:, 1, 0] = w[:, 2]
    S[:, 1, 2] = -w[:, 0]
    S[:, 2, 0] = -w[:, 1]
    S[:, 2, 1] = w[:, 0]
    return S[0] if single else S


def quat_to_euler(q: np.ndarray) -> np.ndarray:
    """
    Convert a unit quaternion to ZYX Euler angles (roll, pitch, yaw).

    Roll and yaw lie in (-pi, pi], pitch in [-pi/2, pi/2]. At gimbal lock
    (|pitch| within 1e-6 of pi/2) roll is fixed to 0 and the whole heading is
    assigned to yaw.

    Raises:
        ValidationError: If q deviates from unit norm by more than 1e-6
    """
    _require_unit(q)
    w, x, y, z = q
    sin_pitch = float(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    pitch = math.asin(sin_pitch)

    if abs(abs(pitch) - math.pi / 2) < GIMBAL_LOCK_TOLERANCE:
        logger.warning(f"Gimbal lock at pitch={pitch:.6f} rad; resolving with roll=0")
        roll = 0.0
        # R01 = -sin(yaw), R11 = cos(yaw) once roll is pinned to zero
        yaw = math.atan2(-2.0 * (x * y - w * z), 1.0 - 2.0 * (x * x + z * z))
    else:
        roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
        yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))

    return np.array([_half_open(roll), pitch, _half_open(yaw)])


def euler_to_quat(euler: np.ndarray) -> np.ndarray:
    """ZYX Euler angles (roll, pitch, yaw) to a unit quaternion."""
    roll, pitch, yaw = euler
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    q = np.array(
        [
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        ]
    )
    return q / np.linalg.norm(q)


def wrap_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return _half_open(math.atan2(math.sin(angle), math.cos(angle)))


def _half_open(angle: float) -> float:
    return math.pi if angle <= -math.pi else angle
