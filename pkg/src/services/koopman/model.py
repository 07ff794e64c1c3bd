"""Identified lifted linear model and its JSON envelope."""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from src.core.exceptions import ValidationError
from src.services.koopman.lifting import LiftingDictionary
from src.services.quadsim import RotorCommand

logger = logging.getLogger(__name__)

RAW_DESCRIPTOR = "raw"


class ModelEnvelope(BaseModel):
    """On-disk JSON layout of a lifted model."""

    p: int
    n: int
    l: int  # noqa: E741
    dictionary: str
    A: list[list[float]]
    B: list[list[float]]
    C: list[list[float]]
    method: str
    residual: float
    svd_cutoff: float
    regularization: str = "none"
    tls_fallback: bool = False
    metadata: dict[str, Any] = {}


@dataclass
class LiftedModel:
    """z+ = A z + B u, x = C z, with the dictionary that produced z."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    dictionary: Optional[LiftingDictionary]
    method: str
    residual: float
    svd_cutoff: float
    regularization: str = "none"
    tls_fallback: bool = False
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        p = self.A.shape[0]
        if self.A.shape != (p, p) or self.B.shape[0] != p or self.C.shape[1] != p:
            raise ValidationError(
                f"Inconsistent model shapes A={self.A.shape}, B={self.B.shape}, C={self.C.shape}"
            )

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.B.shape[1]

    def lift(self, x: np.ndarray) -> np.ndarray:
        """Lift x with the model's dictionary (identity for raw-coordinate models)."""
        if self.dictionary is None:
            return np.asarray(x, dtype=float).copy()
        return self.dictionary.lift(x)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of A sorted by modulus, largest first."""
        eig = self.eigenvalues()
        return eig[np.argsort(-np.abs(eig), kind="stable")]

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues()).max())

    def to_envelope(self) -> ModelEnvelope:
        return ModelEnvelope(
            p=self.p,
            n=self.n,
            l=self.l,
            dictionary=self.dictionary.descriptor if self.dictionary else RAW_DESCRIPTOR,
            A=self.A.tolist(),
            B=self.B.tolist(),
            C=self.C.tolist(),
            method=self.method,
            residual=float(self.residual),
            svd_cutoff=float(self.svd_cutoff),
            regularization=self.regularization,
            tls_fallback=self.tls_fallback,
            metadata=self.metadata,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_envelope().model_dump(), indent=2)

    @classmethod
    def from_envelope(cls, envelope: ModelEnvelope) -> "LiftedModel":
        dictionary = (
            None
            if envelope.dictionary == RAW_DESCRIPTOR
            else LiftingDictionary.from_descriptor(envelope.dictionary)
        )
        model = cls(
            A=np.array(envelope.A, dtype=float),
            B=np.array(envelope.B, dtype=float).reshape(envelope.p, envelope.l),
            C=np.array(envelope.C, dtype=float),
            dictionary=dictionary,
            method=envelope.method,
            residual=envelope.residual,
            svd_cutoff=envelope.svd_cutoff,
            regularization=envelope.regularization,
            tls_fallback=envelope.tls_fallback,
            metadata=dict(envelope.metadata),
        )
        if (model.p, model.n, model.l) != (envelope.p, envelope.n, envelope.l):
            raise ValidationError("Model envelope dimensions disagree with its matrices")
        return model

    @classmethod
    def from_json(cls, text: str) -> "LiftedModel":
        return cls.from_envelope(ModelEnvelope.model_validate_json(text))


def _input_matrix(inputs: Sequence[RotorCommand] | np.ndarray) -> np.ndarray:
    if isinstance(inputs, np.ndarray):
        return np.atleast_2d(inputs.astype(float))
    return np.array([u.thrusts if isinstance(u, RotorCommand) else u for u in inputs], dtype=float)


def predict(
    model: LiftedModel,
    x0: np.ndarray,
    inputs: Sequence[RotorCommand] | np.ndarray,
    steps: int,
) -> np.ndarray:
    """
    Open-loop linear rollout in the lifted space.

    z_0 = lift(x_0), z_{k+1} = A z_k + B u_k, x_k = C z_k; intermediate
    states are never re-lifted.

    Returns:
        Array of shape (steps + 1, n) whose first row is C lift(x_0)
    """
    if steps < 0:
        raise ValidationError(f"steps must be non-negative, got {steps}")
    U = _input_matrix(inputs) if steps > 0 else np.zeros((0, model.l))
    if len(U) < steps:
        raise ValidationError(f"Need {steps} inputs, got {len(U)}")

    z = model.lift(x0)
    predictions = np.empty((steps + 1, model.n))
    predictions[0] = model.C @ z
    for k in range(steps):
        z = model.A @ z + model.B @ U[k]
        predictions[k + 1] = model.C @ z
    return predictions
