"""Unit tests for the observable dictionary."""

import numpy as np
import pytest

from src.core.exceptions import ValidationError
from src.services.koopman import DEFAULT_DICTIONARY, LiftingDictionary, LiftMode, OmegaFrame, lift
from src.services.quadsim import euler_to_rotation_matrix, skew
from tests.helpers import random_states


class TestDictionaryLayout:
    """Test cases for dictionary dimensions and ordering."""

    @pytest.mark.parametrize(
        "mode, dim",
        [(LiftMode.DEDUP, 28), (LiftMode.LITERAL, 34), (LiftMode.IDENTITY, 12)],
    )
    def test_dimensions(self, mode, dim):
        """Test the lifted dimension of each variant."""
        dictionary = LiftingDictionary(mode)
        assert dictionary.dim == dim
        assert lift(np.zeros(12), dictionary).shape == (dim,)

    def test_default_is_dedup(self):
        """Test the default dictionary."""
        assert DEFAULT_DICTIONARY.mode is LiftMode.DEDUP
        assert DEFAULT_DICTIONARY.omega_frame is OmegaFrame.BODY

    def test_names_unique(self):
        """Test that observable names are unique."""
        for mode in LiftMode:
            names = LiftingDictionary(mode).names()
            assert len(names) == len(set(names))

    def test_descriptor_roundtrip(self):
        """Test that descriptors rebuild the same dictionary."""
        for mode in LiftMode:
            for frame in OmegaFrame:
                dictionary = LiftingDictionary(mode, frame)
                assert LiftingDictionary.from_descriptor(dictionary.descriptor) == dictionary

    def test_bad_descriptor(self):
        """Test that an unknown descriptor is rejected."""
        with pytest.raises(ValidationError):
            LiftingDictionary.from_descriptor("polynomial/body:[1,x]")


class TestLift:
    """Test cases for lifting states."""

    def test_origin(self):
        """Test the lift of the zero state."""
        z = lift(np.zeros(12))
        expected = np.concatenate([[1.0], np.zeros(12), np.zeros(3), np.ones(3), np.zeros(9)])
        np.testing.assert_array_equal(z, expected)

    def test_hover_at_height(self):
        """Test the trigonometric blocks at position (0, 0, 2)."""
        x = np.zeros(12)
        x[2] = 2.0
        z = lift(x)
        assert z[0] == 1.0
        np.testing.assert_array_equal(z[1:13], x)
        np.testing.assert_allclose(z[13:16], [0.0, 0.0, np.sin(2.0)])
        np.testing.assert_allclose(z[16:19], [1.0, 1.0, np.cos(2.0)])
        np.testing.assert_array_equal(z[19:28], 0.0)

    def test_rotated_rate_is_column_stacked(self):
        """Test vec(R skew(omega)) ordering with level attitude."""
        x = np.zeros(12)
        a, b, c = 0.3, -0.7, 1.1
        x[9:12] = [a, b, c]
        np.testing.assert_allclose(lift(x)[19:28], [0.0, c, -b, -c, 0.0, a, b, -a, 0.0])

    def test_rotated_rate_uses_attitude(self, rng):
        """Test the R skew(omega) block against a direct computation."""
        x = random_states(rng, 1)[0]
        expected = (euler_to_rotation_matrix(x[6:9]) @ skew(x[9:12])).flatten(order="F")
        np.testing.assert_allclose(lift(x)[19:28], expected, atol=1e-14)

    def test_world_frame_rate(self, rng):
        """Test that the world-frame variant rotates omega first."""
        x = random_states(rng, 1)[0]
        R = euler_to_rotation_matrix(x[6:9])
        expected = (R @ skew(R @ x[9:12])).flatten(order="F")
        dictionary = LiftingDictionary(omega_frame=OmegaFrame.WORLD)
        np.testing.assert_allclose(lift(x, dictionary)[19:28], expected, atol=1e-14)

    @pytest.mark.parametrize("mode", list(LiftMode))
    def test_selector_recovers_state(self, mode, rng):
        """Test C lift(x) == x exactly."""
        dictionary = LiftingDictionary(mode)
        C = dictionary.selector()
        for x in random_states(rng, 10):
            np.testing.assert_array_equal(C @ lift(x, dictionary), x)

    def test_literal_repeats_position_and_velocity(self, rng):
        """Test that the literal variant duplicates rows of x."""
        x = random_states(rng, 1)[0]
        z = lift(x, LiftingDictionary(LiftMode.LITERAL))
        np.testing.assert_array_equal(z[13:19], x[0:6])

    def test_many_matches_single(self, rng):
        """Test column-wise lifting against single lifts."""
        X = random_states(rng, 7).T
        Z = DEFAULT_DICTIONARY.lift_many(X)
        for k in range(7):
            np.testing.assert_array_equal(Z[:, k], lift(X[:, k]))

    def test_rejects_wrong_shape(self):
        """Test that a 13-vector is rejected."""
        with pytest.raises(ValidationError):
            lift(np.zeros(13))
        with pytest.raises(ValidationError):
            DEFAULT_DICTIONARY.lift_many(np.zeros((13, 4)))
