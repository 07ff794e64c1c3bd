"""Pipeline orchestrator: collect -> fit -> control -> eval.

Each stage reads and writes artifacts in one output directory so stages can
run separately from the CLI or back to back through `run_pipeline`.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from src.core.config import FitMethod, PipelineConfig, config_hash
from src.core.exceptions import PipelineStageError, RiccatiConvergenceError
from src.orchestrator import artifacts
from src.services.evaluation import (
    EvalReport,
    check_controllability,
    check_observability,
    check_stabilizability,
    compare_controllers,
    fit_method_summary,
    multi_step_prediction_errors,
    plot_frame,
    prediction_window,
    SpectrumReport,
    render_table,
    spectrum,
)
from src.services.evaluation.report import KOOPMAN, PID
from src.services.koopman import LiftedModel, LiftingDictionary, SnapshotDataset, TrajectoryLog, identify
from src.services.koopman.lifting import STATE_NAMES
from src.services.lqr import LqrGain, LqrWeights, design_lifted_lqr, rollout_closed_loop
from src.services.quadsim import ANALYSIS_DIM, INPUT_DIM, QuadState
from src.services.reference import (
    CascadedPidController,
    HelixSpec,
    collect_logs,
    gen_helix,
    reference_states,
    sample_random_specs,
    simulate_tracking,
)

logger = logging.getLogger(__name__)

STAGES = ("collect", "fit", "control", "eval")


@dataclass
class StageResult:
    """Artifacts written by a stage and the figures worth printing."""

    stage: str
    artifacts: dict[str, Path] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)


def warn_if_schur_stable(report: SpectrumReport, method: str) -> None:
    """Log a warning when the identified A has no eigenvalue outside the unit disk."""
    if report.n_outside_unit_disk == 0:
        logger.warning(
            f"Identified A ({method}) is Schur stable with spectral radius {report.spectral_radius:.4f}; "
            "the open-loop quadrotor is not, so the lifted model misses its instability"
        )


def split_seeds(seed: int) -> tuple[int, int]:
    """Independent collection and evaluation seeds from the root seed."""
    children = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(child.generate_state(1)[0]) for child in children)


class PipelineOrchestrator:
    """Runs the experiment stages against one output directory."""

    def __init__(self, config: PipelineConfig, workers: int = 1):
        """Initialize the orchestrator for a validated config."""
        self.config = config
        self.workers = workers
        self.config_hash = config_hash(config)
        self.out_dir = Path(config.output_dir)
        self.collect_seed, self.eval_seed = split_seeds(config.seed)
        logger.info(f"Pipeline config hash {self.config_hash}, seed {config.seed}")

    def _path(self, stem: str, method: Optional[str] = None, suffix: str = ".csv") -> Path:
        multi = len(self.config.identification.methods) > 1
        name = f"{stem}_{method}" if multi and method else stem
        return self.out_dir / f"{name}{suffix}"

    def _run_stage(self, stage: str, action: Callable[..., StageResult], *args, **kwargs) -> StageResult:
        try:
            result = action(*args, **kwargs)
            logger.info(f"Stage '{stage}' completed")
            return result
        except PipelineStageError:
            raise
        except Exception as e:
            logger.error(f"Stage '{stage}' failed: {e}")
            raise PipelineStageError(stage, str(e)) from e

    # collect

    def collect(self) -> StageResult:
        return self._run_stage("collect", self._collect)

    def _collect(self) -> StageResult:
        cfg = self.config
        specs = sample_random_specs(cfg.helix.count, self.collect_seed, cfg.helix)
        logs = collect_logs(
            specs, cfg.collection_gains, cfg.quad, workers=self.workers, exploration_std=cfg.exploration_std
        )
        path = artifacts.write_dataset(logs, self.out_dir / "dataset.csv", self.config_hash, cfg.seed)

        pairs = SnapshotDataset.from_logs(logs).pairs_per_trajectory()
        diverged = {log.traj_id: log.diverged_at for log in logs if log.diverged_at is not None}
        return StageResult(
            stage="collect",
            artifacts={"dataset": path},
            summary={"pairs_per_trajectory": pairs, "total_pairs": sum(pairs.values()), "diverged": diverged},
        )

    # fit

    def fit(self, dataset_path: Optional[Path] = None, method: Optional[FitMethod] = None) -> StageResult:
        return self._run_stage("fit", self._fit, dataset_path, method)

    def _fit(self, dataset_path: Optional[Path], method: Optional[FitMethod]) -> StageResult:
        ident = self.config.identification
        method = method or ident.methods[0]
        dataset = SnapshotDataset.from_logs(artifacts.read_dataset(dataset_path or self.out_dir / "dataset.csv"))
        dictionary = LiftingDictionary(ident.lift, ident.omega_frame)

        model, rank = identify(
            dataset, dictionary, method=method, cutoff_factor=ident.svd_cutoff_factor, scale_rows=ident.scale_rows
        )
        spec = spectrum(model.A)
        warn_if_schur_stable(spec, method)
        model.metadata.update(
            {
                "rank": rank.to_dict(),
                "spectral_radius": spec.spectral_radius,
                "eigenvalues_outside_unit_disk": spec.n_outside_unit_disk,
            }
        )
        path = artifacts.save_model(model, self._path("model", method, ".json"), self.config_hash, self.config.seed)
        return StageResult(
            stage="fit",
            artifacts={"model": path},
            summary={
                "method": model.method,
                "p": model.p,
                "residual": model.residual,
                "rank": f"{rank.rank}/{rank.rows}",
                "condition_number": rank.condition_number,
                "spectral_radius_A": spec.spectral_radius,
                "tls_fallback": model.tls_fallback,
            },
        )

    # control

    def evaluation_trajectories(self) -> list[HelixSpec]:
        cfg = self.config
        defaults = cfg.helix.model_copy(update={"duration": cfg.horizons.eval_duration})
        return sample_random_specs(cfg.eval_runs, self.eval_seed, defaults)

    def weights(self) -> LqrWeights:
        lqr = self.config.lqr
        return LqrWeights.scaled_identity(ANALYSIS_DIM, INPUT_DIM, lqr.q_scale, lqr.r_scale)

    def design(self, model: LiftedModel) -> LqrGain:
        """LQR gain for a model; on failure the controllability report joins the error."""
        try:
            return design_lifted_lqr(model, self.weights())
        except RiccatiConvergenceError as e:
            verdict = check_controllability(model.A, model.B, self.config.identification.svd_cutoff_factor)
            raise RiccatiConvergenceError(
                f"{e}; controllability rank {verdict.rank}/{verdict.required} "
                f"(condition number {verdict.condition_number:.3e})"
            ) from e

    def control(self, model_path: Optional[Path] = None, method: Optional[FitMethod] = None) -> StageResult:
        return self._run_stage("control", self._control, model_path, method)

    def _control(self, model_path: Optional[Path], method: Optional[FitMethod]) -> StageResult:
        cfg = self.config
        method = method or cfg.identification.methods[0]
        model = artifacts.load_model(model_path or self._path("model", method, ".json"))
        gain = self.design(model)
        envelope = gain.to_envelope(
            self.weights(),
            n=model.n,
            dictionary=model.to_envelope().dictionary,
            method=model.method,
            metadata={"config_hash": self.config_hash, "seed": cfg.seed},
        )
        gain_path = artifacts.save_gain(envelope, self._path("gain", method, ".json"))

        rollouts: list[tuple[int, str, TrajectoryLog]] = []
        steps = cfg.horizons.control_steps
        for run, spec in enumerate(self.evaluation_trajectories()):
            trajectory = gen_helix(spec)
            references = reference_states(trajectory, cfg.quad)
            start = QuadState.from_analysis_vector(references[0])

            koopman_log = rollout_closed_loop(
                model,
                gain,
                trajectory,
                cfg.quad,
                steps,
                x0=start,
                use_feedforward=cfg.lqr.use_feedforward,
                traj_id=run,
            )
            pid = CascadedPidController(cfg.baseline_gains, cfg.quad, trajectory.dt)
            pid_log = simulate_tracking(trajectory, pid, cfg.quad, x0=start, steps=steps, traj_id=run)
            pid_log.references = references[: len(pid_log)]
            rollouts += [(run, KOOPMAN, koopman_log), (run, PID, pid_log)]

        rollout_path = artifacts.write_rollouts(
            rollouts, self._path("rollouts", method), self.config_hash, cfg.seed
        )
        return StageResult(
            stage="control",
            artifacts={"gain": gain_path, "rollouts": rollout_path},
            summary={
                "spectral_radius_closed_loop": gain.spectral_radius,
                "gain_norm": float(np.linalg.norm(gain.K)),
                "dare_iterations": gain.iterations,
                "dare_residual": gain.residual,
                "runs": cfg.eval_runs,
            },
        )

    # eval

    def evaluate(
        self,
        model_path: Optional[Path] = None,
        gain_path: Optional[Path] = None,
        rollouts_path: Optional[Path] = None,
        method: Optional[FitMethod] = None,
        predict: bool = False,
        predict_steps: Optional[int] = None,
    ) -> StageResult:
        return self._run_stage(
            "eval", self._evaluate, model_path, gain_path, rollouts_path, method, predict, predict_steps
        )

    def _diagnostics(self, model: LiftedModel, gain: LqrGain) -> tuple[dict, dict]:
        factor = self.config.identification.svd_cutoff_factor
        spectra = {
            "A": spectrum(model.A).to_dict(),
            "A_minus_BK": spectrum(model.A - model.B @ gain.K).to_dict(),
        }
        diagnostics = {
            "controllability": check_controllability(model.A, model.B, factor).to_dict(),
            "observability": check_observability(model.A, model.C, factor).to_dict(),
            "stabilizability": check_stabilizability(model.A, model.B, factor).to_dict(),
        }
        if "rank" in model.metadata:
            diagnostics["regression_rank"] = model.metadata["rank"]
        return spectra, diagnostics

    def _prediction(self, model: LiftedModel, steps: int, method: str) -> tuple[dict[str, float], Path]:
        cfg = self.config
        logs = collect_logs(
            self.evaluation_trajectories(), cfg.collection_gains, cfg.quad, exploration_std=cfg.exploration_std
        )
        predicted, truth = prediction_window(model, logs[0], 0, steps)
        frame = pd.DataFrame({"step": np.arange(steps + 1), "t": logs[0].times[: steps + 1]})
        for i, name in enumerate(STATE_NAMES):
            frame[f"{name}_true"] = truth[:, i]
            frame[f"{name}_pred"] = predicted[:, i]
        path = artifacts.write_frame(frame, self._path("prediction", method), self.config_hash, cfg.seed)

        horizons = sorted({steps, *cfg.horizons.prediction_comparison})
        # windows shared by every horizon
        last_start = min(len(log) for log in logs) - 1 - max(horizons)
        starts = range(0, last_start + 1, 50) if last_start >= 0 else [0]
        errors = multi_step_prediction_errors(model, logs, horizons, starts=starts)
        return {str(h): errors[h] for h in horizons}, path

    def _evaluate(
        self,
        model_path: Optional[Path],
        gain_path: Optional[Path],
        rollouts_path: Optional[Path],
        method: Optional[FitMethod],
        predict: bool,
        predict_steps: Optional[int],
    ) -> StageResult:
        cfg = self.config
        method = method or cfg.identification.methods[0]
        model = artifacts.load_model(model_path or self._path("model", method, ".json"))
        gain, _ = artifacts.load_gain(gain_path or self._path("gain", method, ".json"))
        logs = artifacts.read_rollouts(rollouts_path or self._path("rollouts", method))

        runs = sorted({run for run, _ in logs})
        koopman_logs = [logs[(run, KOOPMAN)] for run in runs]
        pid_logs = [logs[(run, PID)] for run in runs]
        references = [log.references for log in koopman_logs]

        report = compare_controllers(
            koopman_logs,
            pid_logs,
            references,
            metadata={
                "config_hash": self.config_hash,
                "seed": cfg.seed,
                "collect_seed": self.collect_seed,
                "eval_seed": self.eval_seed,
                "method": model.method,
                "tls_fallback": model.tls_fallback,
                "dictionary": model.to_envelope().dictionary,
            },
        )
        report.spectra, report.diagnostics = self._diagnostics(model, gain)

        written: dict[str, Path] = {}
        if predict:
            report.prediction, written["prediction"] = self._prediction(
                model, predict_steps or cfg.horizons.predict_steps, method
            )

        written.update(self._write_report(report, method))
        written["plot"] = artifacts.write_frame(
            plot_frame(koopman_logs[0], pid_logs[0], references[0]),
            self._path("plot", method),
            self.config_hash,
            cfg.seed,
        )
        return StageResult(
            stage="eval",
            artifacts=written,
            summary={"report": report, "table": render_table(report)},
        )

    def _write_report(self, report: EvalReport, method: Optional[str]) -> dict[str, Path]:
        return {
            "report": artifacts.write_json(
                report.to_json(), self._path("report", method, ".json"), self.config_hash
            ),
            "table": artifacts.write_text(
                artifacts.header_line(self.config_hash, self.config.seed) + render_table(report),
                self._path("report", method, ".txt"),
            ),
        }

    # pipeline

    def run_pipeline(self, predict: bool = True) -> list[StageResult]:
        """Collect once, then fit, control and evaluate for every configured fit method."""
        results = [self.collect()]
        reports: dict[str, EvalReport] = {}
        for method in self.config.identification.methods:
            results.append(self.fit(method=method))
            results.append(self.control(method=method))
            evaluation = self.evaluate(method=method, predict=predict)
            results.append(evaluation)
            reports[method] = evaluation.summary["report"]

        if len(reports) > 1:
            combined = reports["tls"].model_copy(update={"fit_comparison": fit_method_summary(reports)})
            written = self._run_stage(
                "eval",
                lambda: StageResult(stage="eval", artifacts=self._write_report(combined, None)),
            )
            written.summary = {"report": combined, "table": render_table(combined)}
            results.append(written)
        return results
