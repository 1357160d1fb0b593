"""
Unit tests for angle charts, actions and the elliptic special case.
"""

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.action_angle import (
    action_variable,
    build_chart,
    chart_for_level,
    elliptic_chart,
    elliptic_F,
    elliptic_K,
    expansion_terms,
    level_for_action,
    rotation_number_special,
    special_modulus,
)
from src.errors import DomainError
from src.invariant_curves import CurveParams, InvariantCurve, rotation_number_from_chart
from src.potentials import SurisParams, helper_alpha_beta_gamma_D

GENERIC = SurisParams(A=0.02, B=-0.01, C=-0.03, D=0.01)


class TestEllipticFunctions:
    """Test suite for the elliptic integrals."""

    @pytest.mark.parametrize("k", [0.0, 0.3, 0.7, 0.95])
    def test_complete_integral(self, k):
        mpmath.mp.dps = 40
        expected = float(mpmath.ellipk(mpmath.mpf(k) ** 2))
        assert float(elliptic_K(k)) == pytest.approx(expected, rel=1e-14)

    def test_incomplete_integral(self):
        mpmath.mp.dps = 40
        expected = float(mpmath.ellipf(mpmath.mpf("1.1"), mpmath.mpf("0.3") ** 2))
        assert float(elliptic_F(1.1, 0.3)) == pytest.approx(expected, rel=1e-13)

    def test_quasi_periodicity(self):
        assert float(elliptic_F(np.pi, 0.5)) == pytest.approx(2 * float(elliptic_K(0.5)), rel=1e-14)

    def test_modulus_out_of_range(self):
        with pytest.raises(DomainError):
            elliptic_K(1.0)
        with pytest.raises(DomainError):
            elliptic_F(0.3, 1.2)

    def test_special_modulus(self):
        k = special_modulus(0.05, 0.3)
        assert k ** 2 == pytest.approx(4 * 0.05 / (1.05 ** 2 - 0.09))
        assert special_modulus(0.0, 0.3) == 0.0

    def test_special_modulus_domain(self):
        with pytest.raises(DomainError):
            special_modulus(0.05, 1.2)


class TestSpecialCase:
    """Generic quadrature charts against the closed forms at A = B = D = 0."""

    @pytest.mark.parametrize("eps", [0.02, 0.08])
    @pytest.mark.parametrize("eta", [-0.3, 0.0, 0.4])
    def test_chart_matches_elliptic_form(self, eps, eta):
        chart = chart_for_level(SurisParams.special(eps), eta)
        x = np.arange(512) / 512 + 0.3 / 512
        assert_allclose(chart.theta(x), elliptic_chart(eps, eta, x), atol=1e-7)

    @pytest.mark.parametrize("eps", [0.02, 0.08])
    def test_rotation_number_matches(self, eps):
        params = SurisParams.special(eps)
        for eta in (-0.4, 0.1):
            closed = rotation_number_special(eps, eta)
            assert rotation_number_from_chart(params, CurveParams(eta)) == pytest.approx(closed, abs=1e-9)
            birkhoff = InvariantCurve(params, CurveParams(eta)).rotation_number_bracket(20000)[1]
            assert birkhoff == pytest.approx(closed, abs=1e-5)

    def test_free_rotation_limit(self):
        assert rotation_number_special(0.0, 0.0) == pytest.approx(0.25, abs=1e-15)
        assert_allclose(elliptic_chart(0.0, 0.2, [0.1, 0.6]), [0.1, 0.6], atol=1e-15)


class TestAngleChart:
    """Test suite for AngleChart."""

    @classmethod
    def setup_class(cls):
        """Set up test fixtures."""
        cls.chart = build_chart(GENERIC, 0.25)

    def test_lift_normalization(self):
        assert float(self.chart.theta(0.0)) == pytest.approx(0.0, abs=1e-15)
        assert self.chart.normalization_defect() < 1e-12
        x = np.linspace(0.0, 1.0, 11)
        assert_allclose(self.chart.theta(x + 1.0), self.chart.theta(x) + 1.0, atol=1e-12)

    def test_monotone(self):
        assert np.all(self.chart.derivative_table > 0.0)
        assert np.all(np.diff(self.chart.theta_table) > 0.0)

    def test_conjugacy(self):
        assert self.chart.conjugacy_defect() < 1e-9

    def test_inverse(self):
        x = np.linspace(-0.4, 1.7, 29)
        assert_allclose(self.chart.inverse(self.chart.theta(x)), x, atol=1e-12)

    def test_derivative_matches_table(self):
        h = 1e-6
        x = np.array([0.1, 0.45, 0.8])
        numeric = (self.chart.theta(x + h) - self.chart.theta(x - h)) / (2 * h)
        assert_allclose(self.chart.derivative(x), numeric, atol=1e-8)

    def test_free_rotation_chart_is_identity(self):
        chart = build_chart(SurisParams(), 0.2, nodes=256)
        x = np.linspace(0.0, 1.0, 7)
        assert_allclose(chart.theta(x), x, atol=1e-13)
        assert chart.eta == pytest.approx(-np.cos(2 * np.pi * 0.2), abs=1e-12)


class TestActionVariable:
    """Test suite for the action variable and the expansion around 1/4."""

    def test_free_rotation_action(self):
        assert action_variable(SurisParams(), 0.0) == pytest.approx(0.25, abs=1e-15)
        assert level_for_action(SurisParams(), 0.25) == pytest.approx(0.0, abs=1e-12)

    def test_free_rotation_sixth(self):
        assert action_variable(SurisParams(), -0.5) == pytest.approx(1 / 6, abs=1e-14)

    def test_action_is_increasing(self):
        values = [action_variable(GENERIC, eta) for eta in (-0.5, 0.0, 0.5)]
        assert values[0] < values[1] < values[2]

    def test_level_for_action_inverts(self):
        eta = level_for_action(GENERIC, 0.3)
        assert action_variable(GENERIC, eta) == pytest.approx(0.3, abs=1e-13)

    def test_action_outside_window(self):
        with pytest.raises(DomainError):
            level_for_action(GENERIC, 0.49)

    def test_expansion_free_rotation(self):
        terms = expansion_terms(SurisParams(), nodes=256)
        summary = terms.summary()
        assert summary["theta_identity_gap"] < 1e-12
        assert summary["u_sup"] < 1e-8
        assert summary["rotation_slope"] == pytest.approx(1.0, abs=1e-7)
        assert summary["eta_quarter"] == pytest.approx(0.0, abs=1e-12)

    def test_expansion_remainder_is_quadratic(self):
        terms = expansion_terms(SurisParams.special(0.05), nodes=512)
        assert np.all(np.isfinite(terms.remainder_ratios()))
        sizes = np.abs(terms.v).max(axis=1)
        assert sizes[3] < sizes[5] / 4
        assert sizes[2] < sizes[0] / 4
        assert np.abs(terms.u).max() < 1e-8

    def test_angle_derivative_grows_with_odd_parameters(self):
        sizes = [expansion_terms(SurisParams(A=a, B=-a / 2, C=-0.03), nodes=256).summary()["u_sup"]
                 for a in (0.005, 0.01, 0.02)]
        assert 0.0 < sizes[0] < sizes[1] < sizes[2]

    def test_action_slope_at_zero_level(self):
        params = SurisParams.special(0.05)
        h = 1e-5
        slope = (action_variable(params, h) - action_variable(params, -h)) / (2 * h)
        dcal = helper_alpha_beta_gamma_D(params, np.arange(2048) / 2048).dcal
        assert slope == pytest.approx(np.mean(1.0 / dcal) / (2 * np.pi), abs=1e-6)

    def test_quarter_chart_tends_to_identity(self):
        x = np.arange(512) / 512
        gaps = [float(np.abs(build_chart(SurisParams.special(eps), 0.25, nodes=512).theta(x) - x).max())
                for eps in (0.1, 0.05, 0.025)]
        assert gaps[0] > gaps[1] > gaps[2] > 0.0
