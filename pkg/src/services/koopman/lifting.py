"""Observable dictionary lifting the 12-dim Euler state into the Koopman space.

The default dictionary is

    z = [1, x (12), sin(p) (3), cos(p) (3), vec(R skew(omega)) (9)],   p = 28,

where R is the rotation matrix of the Euler angles in x and vec stacks
columns. The literal variant additionally repeats position and velocity as
standalone blocks (p = 34); those rows duplicate rows of x and make the
regression matrix rank deficient. The identity variant lifts nothing and
turns EDMD into plain DMDc.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.exceptions import ValidationError
from src.services.quadsim import ANALYSIS_DIM, euler_to_rotation_matrix, skew

logger = logging.getLogger(__name__)


class LiftMode(str, Enum):
    """Dictionary variants."""
    DEDUP = "dedup"
    LITERAL = "literal"
    IDENTITY = "identity"


class OmegaFrame(str, Enum):
    """Frame of the angular rate used in the R skew(omega) block."""
    BODY = "body"
    WORLD = "world"


STATE_NAMES = ["x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "wx", "wy", "wz"]


@dataclass(frozen=True)
class LiftingDictionary:
    """Descriptor of an observable list and its ordering."""

    mode: LiftMode = LiftMode.DEDUP
    omega_frame: OmegaFrame = OmegaFrame.BODY

    @property
    def n_state(self) -> int:
        return ANALYSIS_DIM

    @property
    def has_constant(self) -> bool:
        return self.mode is not LiftMode.IDENTITY

    @property
    def state_slice(self) -> slice:
        """Rows of z that copy x verbatim."""
        return slice(1, 1 + ANALYSIS_DIM) if self.has_constant else slice(0, ANALYSIS_DIM)

    @property
    def dim(self) -> int:
        return len(self.names())

    @property
    def descriptor(self) -> str:
        return f"{self.mode.value}/{self.omega_frame.value}:[" + ",".join(self.names()) + "]"

    @classmethod
    def from_descriptor(cls, descriptor: str) -> "LiftingDictionary":
        """
        Rebuild a dictionary from its descriptor string.

        Raises:
            ValidationError: If the descriptor prefix is not recognised
        """
        head = descriptor.split(":", 1)[0]
        try:
            mode, frame = head.split("/")
            return cls(LiftMode(mode), OmegaFrame(frame))
        except ValueError as e:
            raise ValidationError(f"Unrecognised dictionary descriptor '{descriptor}': {e}") from e

    def names(self) -> list[str]:
        if self.mode is LiftMode.IDENTITY:
            return list(STATE_NAMES)

        names = ["1"] + list(STATE_NAMES)
        if self.mode is LiftMode.LITERAL:
            names += ["p_x", "p_y", "p_z", "pdot_x", "pdot_y", "pdot_z"]
        names += ["sin_x", "sin_y", "sin_z", "cos_x", "cos_y", "cos_z"]
        names += [f"Rw_{row}{col}" for col in range(3) for row in range(3)]
        return names

    def selector(self) -> np.ndarray:
        """C with C @ lift(x) == x."""
        C = np.zeros((ANALYSIS_DIM, self.dim))
        C[:, self.state_slice] = np.eye(ANALYSIS_DIM)
        return C

    def lift_many(self, X: np.ndarray) -> np.ndarray:
        """
        Lift the columns of a (12, T) state matrix into a (p, T) matrix.

        Raises:
            ValidationError: If X does not have 12 rows
        """
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != ANALYSIS_DIM:
            raise ValidationError(f"Expected a ({ANALYSIS_DIM}, T) state matrix, got {X.shape}")
        if self.mode is LiftMode.IDENTITY:
            return X.copy()

        n_cols = X.shape[1]
        position, velocity = X[0:3], X[3:6]
        R = euler_to_rotation_matrix(X[6:9].T)
        omega = X[9:12].T
        if self.omega_frame is OmegaFrame.WORLD:
            omega = np.einsum("tij,tj->ti", R, omega)
        rotated_rate = np.einsum("tik,tkj->tij", R, skew(omega))
        # column-stacking vec: transpose each 3x3 then read rows
        vec_block = rotated_rate.transpose(0, 2, 1).reshape(n_cols, 9).T

        blocks = [np.ones((1, n_cols)), X]
        if self.mode is LiftMode.LITERAL:
            blocks += [position, velocity]
        blocks += [np.sin(position), np.cos(position), vec_block]
        return np.vstack(blocks)

    def lift(self, x: np.ndarray) -> np.ndarray:
        """Lift a single 12-dim state."""
        x = np.asarray(x, dtype=float)
        if x.shape != (ANALYSIS_DIM,):
            raise ValidationError(f"Expected a {ANALYSIS_DIM}-vector, got shape {x.shape}")
        return self.lift_many(x[:, None])[:, 0]


DEFAULT_DICTIONARY = LiftingDictionary()


def lift(x: np.ndarray, dictionary: LiftingDictionary = DEFAULT_DICTIONARY) -> np.ndarray:
    """Lift a 12-dim state through the observable dictionary."""
    return dictionary.lift(x)
