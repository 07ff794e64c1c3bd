"""Core configuration: application settings and the experiment pipeline config."""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core.exceptions import ConfigurationError
from src.services.koopman.lifting import LiftMode, OmegaFrame
from src.services.quadsim import QuadParams
from src.services.reference import HelixDefaults, PidGains, baseline_pid_gains


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    APP_NAME: str = Field(default="koopman-quadrotor", description="Application name")
    APP_VERSION: str = Field(default="0.1.0", description="Application version")
    DEBUG: bool = Field(default=False, description="Enable debug mode")
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")

    OUTPUT_DIR: str = Field(default="artifacts", description="Default artifact directory")
    DEFAULT_SEED: int = Field(default=0, description="Root seed when neither config nor CLI sets one")
    WORKERS: int = Field(default=1, ge=1, description="Processes used to simulate trajectories")

    def setup_logging(self, verbose: bool = False) -> None:
        """Configure logging based on settings."""
        level = logging.DEBUG if verbose or self.DEBUG else getattr(logging, self.LOG_LEVEL.upper())
        logging.basicConfig(
            level=level,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            force=True,
        )


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get the application settings instance."""
    return settings


FitMethod = Literal["ls", "tls"]


class IdentificationConfig(BaseModel):
    """Dictionary and regression choices."""

    lift: LiftMode = LiftMode.DEDUP
    omega_frame: OmegaFrame = OmegaFrame.BODY
    fit: Literal["ls", "tls", "both"] = "tls"
    svd_cutoff_factor: float = Field(default=10.0, gt=0)
    scale_rows: bool = Field(default=True, description="RMS-normalize observable and input rows before fitting")

    @property
    def methods(self) -> list[FitMethod]:
        return ["ls", "tls"] if self.fit == "both" else [self.fit]


class LqrConfig(BaseModel):
    """Q = q_scale * I_12, R = r_scale * I_4."""

    q_scale: float = Field(default=1e3, ge=0)
    r_scale: float = Field(default=1.0, gt=0)
    use_feedforward: bool = True


class HorizonConfig(BaseModel):
    """Step counts for control and prediction, and the evaluation helix length."""

    control_steps: int = Field(default=150, ge=0)
    predict_steps: int = Field(default=200, ge=1)
    prediction_comparison: tuple[int, int] = (150, 300)
    eval_duration: float = Field(default=5.0, gt=0)


class PipelineConfig(BaseModel):
    """Everything one experiment run depends on; the defaults reproduce the reference experiment."""

    quad: QuadParams = Field(default_factory=QuadParams)
    helix: HelixDefaults = Field(default_factory=HelixDefaults)
    collection_gains: PidGains = Field(default_factory=PidGains)
    baseline_gains: PidGains = Field(default_factory=baseline_pid_gains)
    identification: IdentificationConfig = Field(default_factory=IdentificationConfig)
    lqr: LqrConfig = Field(default_factory=LqrConfig)
    horizons: HorizonConfig = Field(default_factory=HorizonConfig)
    exploration_std: float = Field(
        default=0.02, ge=0, description="Std of Gaussian noise on collection rotor commands, N"
    )
    eval_runs: int = Field(default=5, ge=1)
    seed: int = 0
    output_dir: str = "artifacts"

    @model_validator(mode="after")
    def _eval_horizon_fits(self) -> "PipelineConfig":
        eval_steps = int(round(self.horizons.eval_duration / self.helix.dt))
        needed = max(self.horizons.control_steps, self.horizons.predict_steps)
        if eval_steps < needed:
            raise ValueError(
                f"eval_duration {self.horizons.eval_duration} s gives {eval_steps} steps, fewer than {needed}"
            )
        return self

    def canonical_json(self) -> str:
        """Sorted-key JSON of every field that influences results."""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(config: PipelineConfig) -> str:
    """SHA-256 of the canonical config JSON."""
    return hashlib.sha256(config.canonical_json().encode("utf-8")).hexdigest()


def load_pipeline_config(
    path: Optional[str | Path] = None, overrides: Optional[dict[str, Any]] = None
) -> PipelineConfig:
    """
    Load a JSON pipeline config and apply top-level overrides.

    Args:
        path: JSON file; None gives the defaults
        overrides: Dotted keys such as "identification.fit" mapped to values; None is ignored

    Raises:
        ConfigurationError: If the file is missing, unreadable or invalid
    """
    data: dict = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigurationError(f"Config file not found: {config_path}")
        try:
            data = json.loads(config_path.read_text(encoding="utf-8") or "{}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file {config_path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config file {config_path} must hold a JSON object")

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            target = target.setdefault(key, {})
        target[leaf] = value

    try:
        return PipelineConfig.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError(f"Invalid pipeline config: {e}") from e
