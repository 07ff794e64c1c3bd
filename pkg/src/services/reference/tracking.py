"""Closed-loop simulation of the nonlinear plant and dataset collection."""

import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Callable, Optional, Sequence

import numpy as np

from src.core.exceptions import ValidationError
from src.services.koopman.snapshots import SnapshotDataset, TrajectoryLog
from src.services.quadsim import (
    ANALYSIS_DIM,
    INPUT_DIM,
    STATE_DIM,
    QuadParams,
    QuadState,
    RotorCommand,
    quat_to_euler,
    rk4_step_vector,
)
from src.services.reference.controller import CascadedPidController, PerturbedController, PidGains
from src.services.reference.helix import HelixSpec, Trajectory, TrajectorySample, gen_helix

logger = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e6

ControlLaw = Callable[[QuadState, TrajectorySample], tuple[RotorCommand, np.ndarray]]


def _analysis_vector(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x[0:6], quat_to_euler(x[6:10]), x[10:13]])


def simulate_tracking(
    trajectory: Trajectory,
    control_law: ControlLaw,
    params: QuadParams,
    x0: Optional[QuadState] = None,
    steps: Optional[int] = None,
    traj_id: int = 0,
) -> TrajectoryLog:
    """
    Roll the nonlinear plant forward under a control law along a trajectory.

    Args:
        trajectory: Reference providing the time grid and samples
        control_law: Maps (state, reference sample) to (clamped command, raw request)
        params: Physical parameters
        x0: Initial state; defaults to rest at the first reference point
        steps: Number of integration steps; defaults to len(trajectory) - 1
        traj_id: Identifier stored in the log

    Returns:
        TrajectoryLog with steps + 1 samples, or fewer if the state diverged
    """
    steps = len(trajectory) - 1 if steps is None else steps
    if steps < 0 or steps > len(trajectory) - 1:
        raise ValidationError(f"steps={steps} outside the trajectory's {len(trajectory) - 1} steps")

    dt = trajectory.dt
    x = (x0 or QuadState.at_rest(trajectory.ref_position[0])).to_vector()

    sim_states = np.empty((steps + 1, STATE_DIM))
    states = np.empty((steps + 1, ANALYSIS_DIM))
    inputs = np.empty((steps + 1, INPUT_DIM))
    raw_inputs = np.empty((steps + 1, INPUT_DIM))
    saturated = 0
    diverged_at = None
    n_recorded = steps + 1

    for k in range(steps + 1):
        sim_states[k] = x
        states[k] = _analysis_vector(x)
        command, raw = control_law(QuadState.from_vector(x), trajectory.sample(k))
        inputs[k] = command.thrusts
        raw_inputs[k] = raw
        saturated += int(command.saturated)
        if k == steps:
            break

        x = rk4_step_vector(x, command, dt, params)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_BOUND:
            diverged_at = k + 1
            n_recorded = k + 1
            logger.error(f"Trajectory {traj_id} diverged at step {diverged_at}; aborting rollout")
            break

    if saturated:
        logger.warning(f"Trajectory {traj_id}: rotor commands saturated on {saturated} steps")

    return TrajectoryLog(
        traj_id=traj_id,
        times=trajectory.timestamps[:n_recorded].copy(),
        states=states[:n_recorded],
        inputs=inputs[:n_recorded],
        raw_inputs=raw_inputs[:n_recorded],
        sim_states=sim_states[:n_recorded],
        saturated_steps=saturated,
        diverged_at=diverged_at,
    )


def _simulate_spec(
    traj_id: int, spec: HelixSpec, gains: PidGains, params: QuadParams, exploration_std: float = 0.0
) -> TrajectoryLog:
    trajectory = gen_helix(spec)
    controller = CascadedPidController(gains, params, spec.dt)
    if exploration_std > 0:
        controller = PerturbedController(controller, exploration_std, seed=spec.seed)
    log = simulate_tracking(trajectory, controller, params, traj_id=traj_id)
    logger.info(
        f"Simulated trajectory {traj_id}: r={spec.radius:.3f} m, h={spec.total_height:.3f} m, "
        f"{log.n_pairs} pairs"
    )
    return log


def collect_logs(
    specs: Sequence[HelixSpec],
    gains: PidGains,
    params: QuadParams,
    workers: int = 1,
    exploration_std: float = 0.0,
) -> list[TrajectoryLog]:
    """
    Simulate every helix under the tracking controller.

    Trajectories are independent; with workers > 1 they run in a process
    pool and are merged back in input order. A positive exploration_std adds
    seeded Gaussian noise to the rotor commands, seeded per helix so serial
    and parallel runs agree.
    """
    if not specs:
        raise ValidationError("At least one helix spec is required")

    ids = range(len(specs))
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(
                pool.map(
                    _simulate_spec, ids, specs, repeat(gains), repeat(params), repeat(exploration_std)
                )
            )
    else:
        logs = [
            _simulate_spec(i, spec, gains, params, exploration_std) for i, spec in zip(ids, specs)
        ]

    for log in logs:
        if log.diverged_at is not None:
            logger.error(f"Trajectory {log.traj_id} diverged at step {log.diverged_at}")
    return logs


def collect_dataset(
    specs: Sequence[HelixSpec],
    gains: PidGains,
    params: QuadParams,
    workers: int = 1,
    exploration_std: float = 0.0,
) -> SnapshotDataset:
    """Simulate the helices and assemble the snapshot dataset."""
    logs = collect_logs(specs, gains, params, workers=workers, exploration_std=exploration_std)
    return SnapshotDataset.from_logs(logs)
