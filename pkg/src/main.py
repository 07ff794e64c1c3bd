"""Command-line entry point for the koopman-quadrotor pipeline."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from src.core.config import PipelineConfig, config_hash, get_settings, load_pipeline_config
from src.core.exceptions import ConfigurationError, PipelineStageError
from src.orchestrator.pipeline import STAGES, PipelineOrchestrator, StageResult

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopman-quad",
        description="Koopman (EDMD) identification and LQR tracking for a simulated quadrotor",
    )
    parser.add_argument("command", choices=[*STAGES, "pipeline"], help="Stage to run")
    parser.add_argument("--config", type=Path, help="JSON pipeline config; defaults reproduce the reference experiment")
    parser.add_argument("--seed", type=int, help="Root seed")
    parser.add_argument("--fit", choices=["ls", "tls", "both"], help="Regression method (both: pipeline only)")
    parser.add_argument("--lift", choices=["dedup", "literal", "identity"], help="Observable dictionary")
    parser.add_argument(
        "--lift-literal", dest="lift", action="store_const", const="literal", help="Alias for --lift literal"
    )
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--predict", action="store_true", help="Also write the open-loop prediction CSV")
    parser.add_argument("--steps", type=int, help="Prediction steps with --predict, closed-loop steps otherwise")
    parser.add_argument("--dataset", type=Path, help="Dataset CSV for fit")
    parser.add_argument("--model", type=Path, help="Model JSON for control and eval")
    parser.add_argument("--gain", type=Path, help="Gain JSON for eval")
    parser.add_argument("--rollouts", type=Path, help="Rollout CSV for eval")
    parser.add_argument("--workers", type=int, help="Processes for trajectory simulation")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    return parser


def resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> PipelineConfig:
    """Load the config file and apply CLI overrides; problems are usage errors."""
    if args.config is not None and not args.config.is_file():
        parser.error(f"config file not found: {args.config}")

    overrides = {
        "seed": args.seed,
        "identification.fit": args.fit,
        "identification.lift": args.lift,
        "output_dir": str(args.out) if args.out else None,
    }
    if args.steps is not None:
        key = "horizons.predict_steps" if args.predict else "horizons.control_steps"
        overrides[key] = args.steps
    if args.config is None and args.seed is None:
        overrides["seed"] = get_settings().DEFAULT_SEED
    if args.out is None and args.config is None:
        overrides["output_dir"] = get_settings().OUTPUT_DIR

    try:
        config = load_pipeline_config(args.config, overrides)
    except ConfigurationError as e:
        parser.error(str(e))
    if args.command != "pipeline" and config.identification.fit == "both":
        parser.error("--fit both is only available for the pipeline command")
    return config


def print_result(result: StageResult) -> None:
    print(f"\n[{result.stage}]")
    summary = dict(result.summary)
    table = summary.pop("table", None)
    summary.pop("report", None)
    if "pairs_per_trajectory" in summary:
        for traj_id, pairs in summary.pop("pairs_per_trajectory").items():
            print(f"   trajectory {traj_id}: {pairs} pairs")
    for key, value in summary.items():
        print(f"   {key}: {value}")
    if table:
        print(table)
    for name, path in result.artifacts.items():
        print(f"   wrote {name}: {path}")


def run_command(args: argparse.Namespace, config: PipelineConfig, workers: int) -> list[StageResult]:
    orchestrator = PipelineOrchestrator(config, workers=workers)
    if args.command == "collect":
        return [orchestrator.collect()]
    if args.command == "fit":
        return [orchestrator.fit(dataset_path=args.dataset)]
    if args.command == "control":
        return [orchestrator.control(model_path=args.model)]
    if args.command == "eval":
        return [
            orchestrator.evaluate(
                model_path=args.model,
                gain_path=args.gain,
                rollouts_path=args.rollouts,
                predict=args.predict,
            )
        ]
    return orchestrator.run_pipeline(predict=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function."""
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_settings()
    settings.setup_logging(verbose=args.verbose)
    logger.info(f"Starting {settings.APP_NAME} v{settings.APP_VERSION}: {args.command}")

    config = resolve_config(args, parser)
    workers = args.workers or settings.WORKERS

    try:
        results = run_command(args, config, workers)
    except PipelineStageError as e:
        print(f"\n❌ Stage '{e.stage}' failed: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n⚠️  Interrupted by user", file=sys.stderr)
        return 1

    for result in results:
        print_result(result)
    print(f"\n✅ {args.command} completed (config hash {config_hash(config)[:12]})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
