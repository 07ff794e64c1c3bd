"""Custom exceptions for the koopman-quadrotor toolkit."""


class KoopmanQuadError(Exception):
    """Base exception for all koopman-quadrotor errors."""
    pass


class ConfigurationError(KoopmanQuadError):
    """Raised when configuration is invalid or missing."""
    pass


class ValidationError(KoopmanQuadError):
    """Raised when input validation fails."""
    pass


class SimulationDivergenceError(KoopmanQuadError):
    """Raised when a simulated state leaves the finite region."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class IdentificationError(KoopmanQuadError):
    """Raised when Koopman identification cannot proceed."""
    pass


class RiccatiConvergenceError(KoopmanQuadError):
    """Raised when the discrete Riccati solver fails."""
    pass


class MetricUndefinedError(KoopmanQuadError):
    """Raised when a metric is undefined for the given data."""
    pass


class GridMismatchError(KoopmanQuadError):
    """Raised when logs and references do not share a time grid."""
    pass


class PipelineStageError(KoopmanQuadError):
    """Raised when a pipeline stage fails."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class RankDeficiencyWarning(UserWarning):
    """Warned when a data or Krylov matrix is numerically rank deficient."""
    pass
