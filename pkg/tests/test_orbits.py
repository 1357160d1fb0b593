"""
Unit tests for the periodic orbit solver.
"""

from math import gcd

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.dynamics import PhasePoint, iterate
from src.errors import NoConvergenceError, ParameterError
from src.invariant_curves import curve_for_rotation_number
from src.orbits import (
    PeriodicConfiguration,
    action,
    action_deviation,
    action_spectrum_sample,
    beta,
    curve_sandwich_index,
    fk_residuals,
    initial_momentum_deviation,
    minimize_action,
    orbit_deviation,
    rationals_in_window,
    rotation_symmetry_residual,
    validate_rational,
)
from src.potentials import ConstantPotential, SurisParams, TrigPerturbation, suris_increment, suris_potential

FREE = suris_potential(SurisParams())
SPECIAL = SurisParams.special(0.05)


class TestRationals:
    """Test suite for rational helpers."""

    def test_window(self):
        assert rationals_in_window(6) == [(1, 6), (1, 5), (1, 4), (1, 3)]

    def test_window_is_reduced_and_sorted(self):
        values = rationals_in_window(12)
        assert all(gcd(p, q) == 1 for p, q in values)
        assert [p / q for p, q in values] == sorted(p / q for p, q in values)
        assert (2, 7) in values and (3, 11) in values

    @pytest.mark.parametrize("p, q", [(2, 4), (1, 0), (0, 2)])
    def test_invalid(self, p, q):
        with pytest.raises(ParameterError):
            validate_rational(p, q)

    def test_configuration_extension(self):
        config = PeriodicConfiguration(1, 3, [0.0, 0.3, 0.7])
        assert_allclose(config.extended(), [-0.3, 0.0, 0.3, 0.7, 1.0])
        assert_allclose(config.shifted(0.1).points, [0.1, 0.4, 0.8])


class TestFreeRotation:
    """Orbits of the free rotation V = 0."""

    def test_pinned_orbit(self):
        config = minimize_action(FREE, 1, 4, pin=0.0)
        assert_allclose(config.points, [0.0, 0.25, 0.5, 0.75], atol=1e-15)
        assert config.pin == 0.0
        assert action(FREE, config).value == pytest.approx(0.125, abs=1e-15)

    def test_pinned_third(self):
        config = minimize_action(FREE, 1, 3, pin=0.3)
        assert_allclose(config.points, [0.3, 0.3 + 1 / 3, 0.3 + 2 / 3], atol=1e-14)

    def test_constant_shifts_action(self):
        config = minimize_action(FREE, 1, 5, pin=0.2)
        shifted = action(FREE + ConstantPotential(0.3), config).value
        assert shifted == pytest.approx(action(FREE, config).value + 5 * 0.3, abs=1e-14)

    def test_beta_closed_form(self):
        for q in range(1, 13):
            for p in range(0, q + 1):
                if gcd(p, q) == 1:
                    assert beta(FREE, p, q) == pytest.approx(p * p / (2.0 * q * q), abs=1e-12)

    def test_spectrum(self):
        entries = action_spectrum_sample(FREE, 6, threads=2)
        assert [(e.p, e.q) for e in entries] == rationals_in_window(6)
        small = {(e.p, e.q): e.action for e in action_spectrum_sample(FREE, 4)}
        assert small[(1, 4)] == pytest.approx(1 / 8, abs=1e-14)
        assert small[(1, 3)] == pytest.approx(1 / 6, abs=1e-14)
        for entry in entries:
            assert entry.error is None
            assert entry.action == pytest.approx(entry.p ** 2 / (2.0 * entry.q), abs=1e-12)


class TestSurisOrbits:
    """Orbits of an integrable Suris map."""

    @classmethod
    def setup_class(cls):
        """Set up test fixtures."""
        cls.V = suris_potential(SPECIAL)

    @pytest.mark.parametrize("p, q", [(1, 6), (1, 5), (1, 4), (2, 7), (1, 3)])
    def test_pinned_actions_are_constant(self, p, q):
        values = []
        for x0 in np.linspace(0.0, 1.0, 7, endpoint=False):
            config = minimize_action(self.V, p, q, pin=float(x0))
            assert np.abs(fk_residuals(self.V, config))[1:].max(initial=0.0) < 1e-10
            values.append(action(self.V, config).value)
        assert max(values) - min(values) < 1e-8

    def test_free_minimizer(self):
        config = minimize_action(self.V, 2, 7)
        assert config.pin is None
        assert np.abs(fk_residuals(self.V, config)).max() < 1e-10
        pinned = minimize_action(self.V, 2, 7, pin=0.05)
        assert action(self.V, config).value == pytest.approx(action(self.V, pinned).value, abs=1e-8)

    def test_beta_convexity(self):
        rationals = rationals_in_window(12)
        values = [beta(self.V, p, q) for p, q in rationals]
        points = [p / q for p, q in rationals]
        for i in range(1, len(points) - 1):
            left, mid, right = points[i - 1], points[i], points[i + 1]
            weight = (right - mid) / (right - left)
            chord = weight * values[i - 1] + (1 - weight) * values[i + 1]
            assert values[i] <= chord + 1e-9

    def test_no_convergence(self, mocker):
        mocker.patch("src.orbits.MAX_NEWTON", 0)
        mocker.patch("src.orbits.MAX_GRADIENT", 0)
        with pytest.raises(NoConvergenceError) as info:
            minimize_action(self.V, 1, 5, pin=0.1)
        assert info.value.iterations == 0


class TestDeviations:
    """Test suite for Suris versus perturbed orbit measurements."""

    def test_zero_perturbation(self):
        W = TrigPerturbation()
        assert orbit_deviation(SPECIAL, W, 1, 5, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert action_deviation(SPECIAL, W, 1, 5, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert initial_momentum_deviation(SPECIAL, W, 1, 5, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_linear_and_quadratic_laws(self):
        large = suris_increment(SPECIAL, [4e-3, 0.0, 0.0, 0.0])
        small = suris_increment(SPECIAL, [2e-3, 0.0, 0.0, 0.0])
        orbit_ratio = orbit_deviation(SPECIAL, large, 1, 5, 0.1) / orbit_deviation(SPECIAL, small, 1, 5, 0.1)
        action_ratio = action_deviation(SPECIAL, large, 1, 5, 0.1) / action_deviation(SPECIAL, small, 1, 5, 0.1)
        assert 1.7 < orbit_ratio < 2.3
        assert 3.4 < action_ratio < 4.6

    def test_rotation_symmetry_residual(self):
        V = TrigPerturbation([0.0, 0.01])
        x = np.linspace(0.0, 1.0, 13)
        assert_allclose(rotation_symmetry_residual(V, x, 1, 2), -V.vprime(x), atol=1e-15)

    def test_constant_perturbation(self):
        W = ConstantPotential(0.01)
        assert action_deviation(SPECIAL, W, 1, 5, 0.1) == pytest.approx(0.0, abs=1e-14)
        assert orbit_deviation(SPECIAL, W, 1, 5, 0.1) == pytest.approx(0.0, abs=1e-14)

    def test_sandwich_on_the_suris_orbit(self):
        assert curve_sandwich_index(SPECIAL, TrigPerturbation(), 1, 5, 0.1, slack=1e-8) == 0

    def test_sandwich_under_perturbation(self):
        W = suris_increment(SPECIAL, [1e-3, 0.0, 0.0, 0.0])
        k = curve_sandwich_index(SPECIAL, W, 1, 5, 0.1)
        assert k is not None
        V_S = suris_potential(SPECIAL)
        x = minimize_action(V_S + W, 1, 5, pin=0.1).extended()
        y_minus = x[k + 1] - x[k]
        y_plus = x[k + 2] - x[k + 1] - float(V_S.vprime(x[k + 1]))
        height = float(curve_for_rotation_number(SPECIAL, 1 / 5).psi(x[k + 1]))
        assert min(y_minus, y_plus) - 1e-12 <= height <= max(y_minus, y_plus) + 1e-12


class TestCurveOracle:
    """Pinned orbits of a Suris map against its invariant curves."""

    @classmethod
    def setup_class(cls):
        """Set up test fixtures."""
        cls.V = suris_potential(SPECIAL)

    def test_orbit_follows_the_curve(self):
        curve = curve_for_rotation_number(SPECIAL, 0.25)
        config = minimize_action(self.V, 1, 4, pin=0.1)
        segment = iterate(self.V, PhasePoint(0.1, float(curve.psi(0.1))), 4)
        assert_allclose(segment.xs[:4], config.points, atol=1e-8)
        assert segment.xs[4] == pytest.approx(1.1, abs=1e-8)

    def test_translation_by_one_period(self):
        config = minimize_action(self.V, 2, 7, pin=0.13)
        shifted = minimize_action(self.V, 2, 7, pin=1.13)
        assert_allclose(shifted.points, config.points + 1.0, atol=1e-12)
        assert action(self.V, shifted).value == pytest.approx(action(self.V, config).value, abs=1e-12)


class TestFreeSolver:
    """Global minimizers of perturbed, non-integrable potentials."""

    def test_fixed_point_must_be_critical(self):
        V = suris_potential(SurisParams(A=0.05))
        with pytest.raises(NoConvergenceError):
            minimize_action(V, 0, 1, pin=0.3)
        assert minimize_action(FREE, 0, 1, pin=0.3).residual == 0.0

    def test_free_fixed_point(self):
        V = suris_potential(SurisParams(A=0.05))
        config = minimize_action(V, 0, 1)
        assert config.residual < 1e-10
        grid = np.linspace(0.0, 1.0, 1001)
        assert float(V.value(config.points[0])) <= float(V.value(grid).min()) + 1e-12

    def test_resonant_minimizer_is_global(self):
        V = suris_potential(SPECIAL) + TrigPerturbation([0.0] * 6 + [0.002])
        value = action(V, minimize_action(V, 1, 4)).value
        pinned = []
        for x0 in np.linspace(0.0, 1.0, 200, endpoint=False):
            try:
                pinned.append(action(V, minimize_action(V, 1, 4, pin=float(x0))).value)
            except NoConvergenceError:
                continue
        assert value <= min(pinned) + 1e-12
        assert value / 4 < 0.02905

    def test_failed_seeds_are_skipped(self):
        W = TrigPerturbation([0.0, 0.0, 0.0, 0.0, 0.01], [0.0, 0.004])
        V = suris_potential(SPECIAL) + W
        config = minimize_action(V, 2, 7)
        assert np.abs(fk_residuals(V, config)).max() < 1e-10
