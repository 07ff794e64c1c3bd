"""Koopman-LQR design on an identified model and closed-loop tracking."""

import logging
from typing import Optional

import numpy as np

from src.core.exceptions import SimulationDivergenceError, ValidationError
from src.services.evaluation.diagnostics import spectrum
from src.services.koopman import LiftedModel, TrajectoryLog
from src.services.lqr.riccati import LqrGain, LqrWeights, solve_dare
from src.services.quadsim import (
    INPUT_DIM,
    QuadParams,
    QuadState,
    RotorCommand,
    hover_command,
    wrap_angle,
)
from src.services.reference import Trajectory, TrajectorySample, reference_states, simulate_tracking

logger = logging.getLogger(__name__)


def _free_coordinates(model: LiftedModel) -> list[int]:
    """Lifted coordinates the feedback acts on; the constant observable is excluded."""
    if model.dictionary is not None and model.dictionary.has_constant:
        return list(range(1, model.p))
    return list(range(model.p))


def design_lifted_lqr(model: LiftedModel, weights: LqrWeights) -> LqrGain:
    """
    Solve the lifted LQR problem for an identified model.

    The constant observable is an uncontrollable mode at 1, so the Riccati
    equation is solved on the remaining coordinates and the gain is
    re-embedded with a zero column for the constant.

    Raises:
        ValidationError: If the weights do not match the model
        RiccatiConvergenceError: If the reduced DARE has no stabilizing solution
    """
    if weights.Q.shape[0] != model.n or weights.R.shape[0] != model.l:
        raise ValidationError(
            f"Weights Q={weights.Q.shape}, R={weights.R.shape} do not match n={model.n}, l={model.l}"
        )
    offset = model.dictionary.state_slice.start if model.dictionary is not None else 0
    Q_bar = weights.padded(model.p, offset=offset)

    keep = _free_coordinates(model)
    reduced = solve_dare(
        model.A[np.ix_(keep, keep)],
        model.B[keep],
        Q_bar[np.ix_(keep, keep)],
        weights.R,
    )

    K = np.zeros((model.l, model.p))
    K[:, keep] = reduced.K
    P = np.zeros((model.p, model.p))
    P[np.ix_(keep, keep)] = reduced.P

    full = spectrum(model.A - model.B @ K)
    logger.info(
        f"Lifted LQR: |K|_F={np.linalg.norm(K):.4e}, reduced spectral radius="
        f"{reduced.spectral_radius:.6f}, full closed-loop radius={full.spectral_radius:.6f}"
    )
    return LqrGain(
        K=K,
        P=P,
        spectral_radius=reduced.spectral_radius,
        iterations=reduced.iterations,
        residual=reduced.residual,
        closed_loop_eigenvalues=full.eigenvalues,
        reduced_coordinates=keep,
    )


def feedforward_command(sample: TrajectorySample, params: QuadParams) -> RotorCommand:
    """Equal rotor thrusts carrying m |a_ref + g|; hover when the reference is unaccelerated."""
    thrust = params.m * np.linalg.norm(sample.acceleration + np.array([0.0, 0.0, params.g]))
    return RotorCommand(np.full(INPUT_DIM, thrust / INPUT_DIM))


def _align_angles(x: np.ndarray, x_ref: np.ndarray) -> np.ndarray:
    # move the reference Euler angles onto the branch of x
    aligned = x_ref.copy()
    diff = np.array([wrap_angle(a) for a in x[6:9] - x_ref[6:9]])
    aligned[6:9] = x[6:9] - diff
    return aligned


def lqr_request(
    model: LiftedModel,
    gain: LqrGain,
    x: np.ndarray,
    x_ref: np.ndarray,
    u_ff: RotorCommand,
) -> np.ndarray:
    """Unclamped u_ff - K (lift(x) - lift(x_ref))."""
    if gain.K.shape != (model.l, model.p):
        raise ValidationError(f"Gain {gain.K.shape} does not match model (l={model.l}, p={model.p})")
    x = np.asarray(x, dtype=float)
    x_ref = _align_angles(x, np.asarray(x_ref, dtype=float))
    return u_ff.thrusts - gain.K @ (model.lift(x) - model.lift(x_ref))


def koopman_lqr_control(
    model: LiftedModel,
    gain: LqrGain,
    x: np.ndarray,
    x_ref: np.ndarray,
    u_ff: Optional[RotorCommand] = None,
    params: Optional[QuadParams] = None,
) -> RotorCommand:
    """
    Lifted-error state feedback around a reference.

    Args:
        model: Identified lifted model
        gain: LQR gain designed on the model
        x: Current 12-dim analysis state
        x_ref: 12-dim reference state
        u_ff: Feedforward command; hover thrusts when omitted
        params: Physical parameters used for the hover default

    Returns:
        Rotor command with thrusts clamped at zero
    """
    if u_ff is None:
        u_ff = hover_command(params or QuadParams())
    return RotorCommand.from_raw(lqr_request(model, gain, x, x_ref, u_ff), warn=False)


def rollout_closed_loop(
    model: LiftedModel,
    gain: LqrGain,
    trajectory: Trajectory,
    params: QuadParams,
    steps: int,
    x0: Optional[QuadState] = None,
    use_feedforward: bool = True,
    traj_id: int = 0,
) -> TrajectoryLog:
    """
    Fly the nonlinear plant under Koopman-LQR along a trajectory.

    The rollout starts on the reference unless x0 is given. The log carries
    the true states, the 12-dim references and both clamped and raw inputs.

    Raises:
        ValidationError: If steps exceeds the trajectory
        SimulationDivergenceError: If the state norm leaves the divergence bound
    """
    if steps < 0 or steps > len(trajectory) - 1:
        raise ValidationError(f"steps={steps} exceeds the trajectory's {len(trajectory) - 1} steps")

    references = reference_states(trajectory, params)
    hover = hover_command(params)

    def control_law(state: QuadState, sample: TrajectorySample) -> tuple[RotorCommand, np.ndarray]:
        u_ff = feedforward_command(sample, params) if use_feedforward else hover
        raw = lqr_request(model, gain, state.to_analysis_vector(), references[sample.index], u_ff)
        return RotorCommand.from_raw(raw, warn=False), raw

    start = x0 or QuadState.from_analysis_vector(references[0])
    log = simulate_tracking(trajectory, control_law, params, x0=start, steps=steps, traj_id=traj_id)
    log.references = references[: len(log)]

    if log.diverged_at is not None:
        raise SimulationDivergenceError(
            f"Koopman-LQR rollout {traj_id} diverged at step {log.diverged_at}", step=log.diverged_at
        )
    logger.info(f"Koopman-LQR rollout {traj_id}: {steps} steps, {log.saturated_steps} saturated")
    return log
