"""Integration tests: Koopman identification on simulated flight data."""

import numpy as np
import pytest

from src.core.exceptions import RankDeficiencyWarning
from src.services.evaluation import grouped_nrmse, multi_step_prediction_errors, spectrum
from src.services.koopman import (
    DEFAULT_DICTIONARY,
    LiftingDictionary,
    LiftMode,
    SnapshotDataset,
    assemble,
    dmdc,
    fit_ls,
    identify,
    truncated_pinv,
)
from src.services.quadsim import QuadParams
from src.services.reference import HelixDefaults, PidGains, collect_logs, sample_random_specs


@pytest.fixture(scope="module")
def flight_logs():
    """Two 3 s helices flown by the PD controller."""
    specs = sample_random_specs(2, seed=5, defaults=HelixDefaults(duration=3.0))
    return collect_logs(specs, PidGains(), QuadParams())


@pytest.fixture(scope="module")
def flight_data(flight_logs):
    """Snapshot pairs of the flight logs."""
    return SnapshotDataset.from_logs(flight_logs)


class TestIdentificationOnFlightData:
    """Test cases for EDMD on simulated helices."""

    @pytest.mark.parametrize("method", ["ls", "tls"])
    def test_one_step_position_prediction(self, flight_data, method):
        """Test that one-step position predictions are within 1%."""
        model, report = identify(flight_data, DEFAULT_DICTIONARY, method=method)
        assert model.p == 28
        assert report.rows == 32

        Z_next = model.A @ DEFAULT_DICTIONARY.lift_many(flight_data.X) + model.B @ flight_data.Gamma
        predicted = (model.C @ Z_next).T
        errors = grouped_nrmse(predicted, flight_data.X_plus.T)
        assert errors["position"] < 1.0

    def test_selector_and_solution(self, flight_data):
        """Test C selection and that K equals Xi(X+) times the truncated pseudo-inverse."""
        lifted = assemble(flight_data)
        model = fit_ls(*lifted, scale_rows=False)
        np.testing.assert_array_equal(model.C, DEFAULT_DICTIONARY.selector())

        Omega = np.vstack([lifted.Xi_X, lifted.Gamma])
        pinv, _ = truncated_pinv(Omega)
        np.testing.assert_allclose(np.hstack([model.A, model.B]), lifted.Xi_Xplus @ pinv)

    def test_identity_dictionary_matches_dmdc(self, flight_data):
        """Test that the identity lift predicts like plain DMDc on flight data."""
        identity = LiftingDictionary(LiftMode.IDENTITY)
        model, _ = identify(flight_data, identity, method="ls")
        A, B = dmdc(flight_data.X, flight_data.X_plus, flight_data.Gamma)
        ours = model.A @ flight_data.X + model.B @ flight_data.Gamma
        theirs = A @ flight_data.X + B @ flight_data.Gamma
        assert np.linalg.norm(ours - theirs) <= 1e-6 * np.linalg.norm(flight_data.X_plus)

    def test_literal_dictionary_still_fits(self, flight_data):
        """Test that the rank-deficient literal lift warns and still predicts."""
        literal = LiftingDictionary(LiftMode.LITERAL)
        with pytest.warns(RankDeficiencyWarning):
            model, report = identify(flight_data, literal, method="ls")
        assert report.rank < report.rows
        assert np.all(np.isfinite(model.A))

    def test_spectrum_near_unit_circle(self, flight_data):
        """Test that the identified dynamics keep the constant mode at one."""
        model, _ = identify(flight_data, method="ls")
        report = spectrum(model.A)
        assert np.min(np.abs(report.eigenvalues - 1.0)) < 1e-3

    def test_short_horizon_prediction(self, flight_data, flight_logs):
        """Test that short open-loop predictions stay accurate on training logs."""
        model, _ = identify(flight_data, method="ls")
        errors = multi_step_prediction_errors(model, flight_logs, [5], starts=(0, 100, 200))
        assert errors[5] < 5.0
