"""Integration tests: artifact files written by one stage and read by the next."""

import json

import numpy as np
import pytest

from src.core.exceptions import ValidationError
from src.orchestrator import artifacts
from src.services.evaluation import compare_controllers
from src.services.lqr import LqrWeights, design_lifted_lqr, rollout_closed_loop
from src.services.quadsim import QuadState
from src.services.reference import CascadedPidController, baseline_pid_gains, simulate_tracking


@pytest.fixture
def rollouts(params, hover_model, gentle_helix):
    """One Koopman-LQR and one PID rollout on the gentle helix."""
    gain = design_lifted_lqr(hover_model, LqrWeights.scaled_identity(12, 4, 1e3, 1.0))
    koopman_log = rollout_closed_loop(hover_model, gain, gentle_helix, params, steps=50)
    start = QuadState.from_analysis_vector(koopman_log.references[0])
    pid = CascadedPidController(baseline_pid_gains(), params, gentle_helix.dt)
    pid_log = simulate_tracking(gentle_helix, pid, params, x0=start, steps=50)
    pid_log.references = koopman_log.references
    return gain, koopman_log, pid_log


class TestModelAndGainFiles:
    """Test cases for JSON artifacts."""

    def test_model_round_trip(self, tmp_path, hover_model):
        """Test that the model file restores matrices and records provenance."""
        path = artifacts.save_model(hover_model, tmp_path / "model.json", "feed", 4)
        restored = artifacts.load_model(path)
        np.testing.assert_array_equal(restored.A, hover_model.A)
        np.testing.assert_array_equal(restored.B, hover_model.B)
        assert restored.metadata["config_hash"] == "feed"
        assert restored.metadata["seed"] == 4

    def test_missing_model(self, tmp_path):
        """Test that a missing model file is a validation error."""
        with pytest.raises(ValidationError):
            artifacts.load_model(tmp_path / "absent.json")

    def test_corrupt_model(self, tmp_path):
        """Test that a JSON file of the wrong shape is rejected."""
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"p": 1}))
        with pytest.raises(ValidationError):
            artifacts.load_model(path)

    def test_gain_round_trip(self, tmp_path, hover_model, rollouts):
        """Test that the gain file restores K and the design weights."""
        gain, _, _ = rollouts
        weights = LqrWeights.scaled_identity(12, 4, 1e3, 1.0)
        envelope = gain.to_envelope(weights, n=12, dictionary="identity/body:[]", method="ls")
        loaded, loaded_envelope = artifacts.load_gain(artifacts.save_gain(envelope, tmp_path / "gain.json"))
        np.testing.assert_array_equal(loaded.K, gain.K)
        np.testing.assert_array_equal(np.array(loaded_envelope.Q), weights.Q)
        assert loaded.spectral_radius == gain.spectral_radius

    def test_json_hash_checked(self, tmp_path):
        """Test that a report must carry the expected config hash."""
        payload = json.dumps({"metadata": {"config_hash": "abc"}})
        artifacts.write_json(payload, tmp_path / "ok.json", "abc")
        with pytest.raises(ValidationError):
            artifacts.write_json(payload, tmp_path / "bad.json", "def")


class TestRolloutFiles:
    """Test cases for the rollout CSV."""

    def test_round_trip(self, tmp_path, rollouts):
        """Test that rollouts come back keyed by run and controller, bit for bit."""
        _, koopman_log, pid_log = rollouts
        path = artifacts.write_rollouts(
            [(0, "koopman", koopman_log), (0, "pid", pid_log)], tmp_path / "rollouts.csv", "cafe", 1
        )
        assert artifacts.read_header(path) == ("cafe", 1)

        logs = artifacts.read_rollouts(path)
        assert set(logs) == {(0, "koopman"), (0, "pid")}
        np.testing.assert_array_equal(logs[(0, "koopman")].states, koopman_log.states)
        np.testing.assert_array_equal(logs[(0, "koopman")].references, koopman_log.references)
        np.testing.assert_array_equal(logs[(0, "pid")].raw_inputs, pid_log.raw_inputs)

    def test_report_from_disk_matches_memory(self, tmp_path, rollouts):
        """Test that reports built from the CSV equal reports built in memory."""
        _, koopman_log, pid_log = rollouts
        path = artifacts.write_rollouts(
            [(0, "koopman", koopman_log), (0, "pid", pid_log)], tmp_path / "rollouts.csv", "cafe", 1
        )
        logs = artifacts.read_rollouts(path)
        from_disk = compare_controllers(logs[(0, "koopman")], logs[(0, "pid")], logs[(0, "koopman")].references)
        in_memory = compare_controllers(koopman_log, pid_log, koopman_log.references)
        assert from_disk.to_json() == in_memory.to_json()

    def test_rollout_needs_references(self, tmp_path, rollouts):
        """Test that a log without references cannot be written."""
        _, koopman_log, _ = rollouts
        koopman_log.references = None
        with pytest.raises(ValidationError):
            artifacts.write_rollouts([(0, "koopman", koopman_log)], tmp_path / "r.csv", "cafe", 1)

    def test_missing_columns(self, tmp_path):
        """Test that a CSV without the expected columns is rejected."""
        path = tmp_path / "dataset.csv"
        path.write_text("# config_hash=ab seed=0\nt,x\n0,1\n")
        with pytest.raises(ValidationError):
            artifacts.read_dataset(path)

    def test_header_required(self, tmp_path):
        """Test that a CSV without a provenance line is rejected."""
        path = tmp_path / "plain.csv"
        path.write_text("t,x\n0,1\n")
        with pytest.raises(ValidationError):
            artifacts.read_header(path)
