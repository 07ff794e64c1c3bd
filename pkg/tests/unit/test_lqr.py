"""Unit tests for the Riccati solver and the Koopman-LQR law."""

import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from src.core.exceptions import RiccatiConvergenceError, ValidationError
from src.services.koopman import DEFAULT_DICTIONARY, LiftedModel
from src.services.lqr import (
    LqrGain,
    LqrWeights,
    dare_residual,
    lqr_gain,
    design_lifted_lqr,
    feedforward_command,
    koopman_lqr_control,
    lqr_request,
    pad_Q,
    refine_dare,
    solve_dare,
)
from src.services.quadsim import RotorCommand, hover_command
from src.services.reference import TrajectorySample

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0


def value_iteration(A, B, Q, R, iterations=5000):
    P = Q.copy()
    for _ in range(iterations):
        BtPA = B.T @ P @ A
        P = A.T @ P @ A - BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA) + Q
    return P


def double_integrator(dt=0.1):
    A = np.array([[1.0, dt], [0.0, 1.0]])
    B = np.array([[0.5 * dt * dt], [dt]])
    return A, B


def lifted_model(rng: np.random.Generator) -> LiftedModel:
    """Synthetic dedup-shaped model whose first coordinate is a constant."""
    p = DEFAULT_DICTIONARY.dim
    A = rng.normal(size=(p, p))
    A[0] = 0.0
    A[0, 0] = 1.0
    A[1:, 1:] *= 0.9 / np.abs(np.linalg.eigvals(A[1:, 1:])).max()
    B = rng.normal(size=(p, 4))
    B[0] = 0.0
    return LiftedModel(A, B, DEFAULT_DICTIONARY.selector(), DEFAULT_DICTIONARY, "ls", 0.0, 0.0)


class TestPadQ:
    """Test cases for lifting the state weight."""

    def test_top_left(self):
        """Test the default placement."""
        Q = np.array([[2.0, 1.0], [1.0, 3.0]])
        Q_bar = pad_Q(Q, 4)
        np.testing.assert_array_equal(Q_bar[:2, :2], Q)
        assert Q_bar[2:].sum() == 0.0 and Q_bar[:, 2:].sum() == 0.0

    def test_offset(self):
        """Test placement after a leading constant."""
        Q_bar = pad_Q(np.eye(12), 28, offset=1)
        np.testing.assert_array_equal(np.diag(Q_bar)[1:13], 1.0)
        assert Q_bar[0, 0] == 0.0
        assert Q_bar.sum() == 12.0

    def test_same_size(self):
        """Test that p == n is the identity embedding."""
        Q = np.diag([1.0, 2.0])
        np.testing.assert_array_equal(pad_Q(Q, 2), Q)

    def test_too_large(self):
        """Test that Q must fit."""
        with pytest.raises(ValidationError):
            pad_Q(np.eye(12), 12, offset=1)

    def test_asymmetric(self):
        """Test symmetry validation."""
        with pytest.raises(ValidationError):
            pad_Q(np.array([[1.0, 2.0], [0.0, 1.0]]), 3)


class TestLqrWeights:
    """Test cases for weight validation."""

    def test_scaled_identity(self):
        """Test the default weight construction."""
        weights = LqrWeights.scaled_identity(12, 4, 1e3, 1.0)
        np.testing.assert_array_equal(weights.Q, 1e3 * np.eye(12))
        np.testing.assert_array_equal(weights.R, np.eye(4))

    def test_rejects_indefinite_q(self):
        """Test that Q must be PSD."""
        with pytest.raises(ValidationError):
            LqrWeights(Q=np.diag([1.0, -1.0]), R=np.eye(1))

    def test_rejects_singular_r(self):
        """Test that R must be PD."""
        with pytest.raises(ValidationError):
            LqrWeights(Q=np.eye(2), R=np.zeros((1, 1)))


class TestSolveDare:
    """Test cases for the doubling Riccati solver."""

    def test_scalar_closed_form(self):
        """Test a = b = q = r = 1, where P is the golden ratio."""
        gain = solve_dare(np.eye(1), np.eye(1), np.eye(1), np.eye(1))
        assert gain.P[0, 0] == pytest.approx(GOLDEN_RATIO, rel=1e-12)
        assert gain.K[0, 0] == pytest.approx(GOLDEN_RATIO / (1.0 + GOLDEN_RATIO), rel=1e-12)
        assert gain.spectral_radius == pytest.approx(1.0 - gain.K[0, 0], rel=1e-12)

    def test_matches_value_iteration(self):
        """Test a scalar unstable system against fixed-point iteration."""
        A, B, Q, R = np.array([[1.1]]), np.array([[0.5]]), np.array([[2.0]]), np.array([[0.3]])
        gain = solve_dare(A, B, Q, R)
        np.testing.assert_allclose(gain.P, value_iteration(A, B, Q, R), rtol=1e-10)

    def test_zero_dynamics(self):
        """Test that A = 0 gives P = Q and K = 0."""
        Q = np.diag([1.0, 2.0])
        gain = solve_dare(np.zeros((2, 2)), np.ones((2, 1)), Q, np.eye(1))
        np.testing.assert_allclose(gain.P, Q, atol=1e-14)
        np.testing.assert_allclose(gain.K, 0.0, atol=1e-14)

    def test_double_integrator(self):
        """Test the double integrator against scipy and value iteration."""
        A, B = double_integrator()
        Q, R = np.eye(2), np.array([[0.1]])
        gain = solve_dare(A, B, Q, R)
        np.testing.assert_allclose(gain.P, solve_discrete_are(A, B, Q, R), rtol=1e-8)
        np.testing.assert_allclose(gain.P, value_iteration(A, B, Q, R), rtol=1e-8)
        assert dare_residual(A, B, Q, R, gain.P) <= 1e-8 * max(np.linalg.norm(gain.P), 1.0)
        assert gain.spectral_radius < 1.0
        np.testing.assert_allclose(gain.P, gain.P.T, atol=1e-12)

    def test_joint_scaling_keeps_gain(self):
        """Test that scaling Q and R together scales P and keeps K."""
        A, B = double_integrator()
        base = solve_dare(A, B, np.eye(2), np.eye(1))
        scaled = solve_dare(A, B, 50.0 * np.eye(2), 50.0 * np.eye(1))
        np.testing.assert_allclose(scaled.P, 50.0 * base.P, rtol=1e-9)
        np.testing.assert_allclose(scaled.K, base.K, rtol=1e-9)

    def test_larger_r_means_smaller_gain(self):
        """Test that penalizing input more shrinks the gain."""
        A, B = double_integrator()
        cheap = solve_dare(A, B, np.eye(2), np.array([[0.01]]))
        costly = solve_dare(A, B, np.eye(2), np.array([[100.0]]))
        assert np.linalg.norm(costly.K) < np.linalg.norm(cheap.K)

    @pytest.mark.parametrize("alpha", [2.0, 10.0, 100.0])
    def test_scaling_r_never_grows_gain(self, hover_model, alpha):
        """Test that R times alpha does not increase ||K||_F on the hover model."""
        base = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, 1.0))
        costly = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, alpha))
        assert np.linalg.norm(costly.K) <= np.linalg.norm(base.K)

    def test_lifted_weights_meet_relative_residual(self, rng):
        """Test a 27-state lifted design against scipy under the strict relative residual."""
        model = lifted_model(rng)
        A, B = model.A[1:, 1:], model.B[1:]
        Q = np.zeros((27, 27))
        Q[:12, :12] = 1e3 * np.eye(12)
        R = np.eye(4)
        gain = solve_dare(A, B, Q, R)
        assert gain.residual <= 1e-8 * np.linalg.norm(gain.P)
        np.testing.assert_allclose(gain.P, solve_discrete_are(A, B, Q, R), rtol=1e-6, atol=1e-8)

    def test_unstabilizable(self):
        """Test that an uncontrollable unstable mode is reported."""
        with pytest.raises(RiccatiConvergenceError, match="not stabilizable"):
            solve_dare(np.diag([2.0, 0.5]), np.array([[0.0], [1.0]]), np.eye(2), np.eye(1))

    def test_shape_mismatch(self):
        """Test shape validation."""
        with pytest.raises(ValidationError):
            solve_dare(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))


class TestRefineDare:
    """Test cases for Newton-Kleinman refinement of a Riccati solution."""

    def test_polishes_perturbed_solution(self):
        """Test that a slightly wrong stabilizing P is driven to the exact solution."""
        A, B = double_integrator()
        Q, R = np.eye(2), np.array([[0.1]])
        exact = solve_discrete_are(A, B, Q, R)
        P, residual, steps = refine_dare(A, B, Q, R, exact * (1.0 + 1e-4))
        assert steps >= 1
        assert residual <= 1e-8 * np.linalg.norm(P)
        np.testing.assert_allclose(P, exact, rtol=1e-8)

    def test_accurate_solution_untouched(self):
        """Test that no step is taken when the residual already passes."""
        A, B = double_integrator()
        Q, R = np.eye(2), np.array([[0.1]])
        exact = solve_discrete_are(A, B, Q, R)
        P, residual, steps = refine_dare(A, B, Q, R, exact)
        assert steps == 0
        np.testing.assert_array_equal(P, exact)
        assert residual == dare_residual(A, B, Q, R, exact)

    def test_gain_from_refined_solution_stabilizes(self, hover_model):
        """Test refinement from a coarse guess on the hover model."""
        A, B = hover_model.A, hover_model.B
        Q, R = 1e3 * np.eye(12), np.eye(4)
        exact = solve_discrete_are(A, B, Q, R)
        P, residual, _ = refine_dare(A, B, Q, R, exact * (1.0 + 1e-3))
        assert residual <= 1e-8 * np.linalg.norm(P)
        K = lqr_gain(A, B, R, P)
        assert np.abs(np.linalg.eigvals(A - B @ K)).max() < 1.0


class TestDesignLiftedLqr:
    """Test cases for the lifted design."""

    def test_constant_column_is_zero(self, rng):
        """Test that the constant observable gets no feedback."""
        model = lifted_model(rng)
        gain = design_lifted_lqr(model, LqrWeights.scaled_identity(12, 4, 10.0, 1.0))
        assert gain.K.shape == (4, 28)
        np.testing.assert_array_equal(gain.K[:, 0], 0.0)
        assert gain.reduced_coordinates == list(range(1, 28))
        assert gain.spectral_radius < 1.0

    def test_weights_must_match(self, rng):
        """Test that weights sized for another model are rejected."""
        with pytest.raises(ValidationError):
            design_lifted_lqr(lifted_model(rng), LqrWeights.scaled_identity(28, 4, 1.0, 1.0))

    def test_hover_model_is_stabilized(self, hover_model):
        """Test the design on the linearized plant."""
        gain = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, 1.0))
        assert gain.reduced_coordinates == list(range(12))
        assert gain.spectral_radius < 1.0

    def test_envelope_roundtrip(self, rng):
        """Test the gain JSON envelope."""
        model = lifted_model(rng)
        weights = LqrWeights.scaled_identity(12, 4, 10.0, 1.0)
        gain = design_lifted_lqr(model, weights)
        envelope = gain.to_envelope(weights, n=12, dictionary=DEFAULT_DICTIONARY.descriptor, method="ls")
        restored = LqrGain.from_envelope(envelope.model_validate_json(envelope.model_dump_json()))
        np.testing.assert_array_equal(restored.K, gain.K)
        assert restored.reduced_coordinates == gain.reduced_coordinates


class TestControlLaw:
    """Test cases for the lifted-error feedback law."""

    def test_on_reference_returns_feedforward(self, rng, params):
        """Test that zero tracking error yields u_ff exactly."""
        model = lifted_model(rng)
        gain = design_lifted_lqr(model, LqrWeights.scaled_identity(12, 4, 10.0, 1.0))
        x = np.zeros(12)
        x[2] = 1.0
        u = koopman_lqr_control(model, gain, x, x.copy(), params=params)
        np.testing.assert_array_equal(u.thrusts, hover_command(params).thrusts)

    def test_continuity(self, rng, params):
        """Test that a small state change gives a small command change."""
        model = lifted_model(rng)
        gain = design_lifted_lqr(model, LqrWeights.scaled_identity(12, 4, 10.0, 1.0))
        x_ref = np.zeros(12)
        u_ff = hover_command(params)
        base = lqr_request(model, gain, x_ref, x_ref, u_ff)
        nudged = x_ref.copy()
        nudged[0] = 1e-7
        assert np.linalg.norm(lqr_request(model, gain, nudged, x_ref, u_ff) - base) < 1e-3

    def test_angle_branch_aligned(self, hover_model, params):
        """Test that yaw errors across +-pi are taken the short way round."""
        gain = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, 1.0))
        u_ff = hover_command(params)
        x, x_ref = np.zeros(12), np.zeros(12)
        x[8], x_ref[8] = np.pi - 0.01, -np.pi + 0.01
        wrapped = lqr_request(hover_model, gain, x, x_ref, u_ff)
        y, y_ref = np.zeros(12), np.zeros(12)
        y[8] = -0.02
        np.testing.assert_allclose(wrapped, lqr_request(hover_model, gain, y, y_ref, u_ff), atol=1e-9)

    def test_above_reference_reduces_thrust(self, hover_model, params):
        """Test that hovering above the reference lowers total thrust."""
        gain = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, 1.0))
        x_ref = np.zeros(12)
        x = x_ref.copy()
        x[2] = 0.1
        u = koopman_lqr_control(hover_model, gain, x, x_ref, params=params)
        assert u.thrusts.sum() < 4 * params.hover_thrust

    def test_negative_requests_clamped(self, hover_model, params):
        """Test that a large upward error clamps rotors at zero."""
        gain = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, 1.0))
        x = np.zeros(12)
        x[2] = 100.0
        u = koopman_lqr_control(hover_model, gain, x, np.zeros(12), params=params)
        assert u.saturated
        assert np.all(u.thrusts >= 0.0)

    def test_gain_shape_checked(self, hover_model, params):
        """Test that a gain from another model is rejected."""
        gain = LqrGain(K=np.zeros((4, 28)), P=np.zeros((28, 28)), spectral_radius=0.0, iterations=0, residual=0.0)
        with pytest.raises(ValidationError):
            lqr_request(hover_model, gain, np.zeros(12), np.zeros(12), hover_command(params))


class TestFeedforward:
    """Test cases for the feedforward thrust."""

    def test_hover_for_unaccelerated_reference(self, params):
        """Test that zero acceleration gives hover thrust."""
        sample = TrajectorySample(0, 0.0, np.zeros(3), np.zeros(3), np.zeros(3), 0.0)
        np.testing.assert_allclose(feedforward_command(sample, params).thrusts, params.hover_thrust)

    def test_centripetal_load(self, params):
        """Test m |a + g| / 4 for a horizontal acceleration."""
        sample = TrajectorySample(0, 0.0, np.zeros(3), np.zeros(3), np.array([3.0, 4.0, 0.0]), 0.0)
        expected = params.m * np.sqrt(25.0 + params.g**2) / 4.0
        command = feedforward_command(sample, params)
        np.testing.assert_allclose(command.thrusts, expected)
        assert isinstance(command, RotorCommand)
