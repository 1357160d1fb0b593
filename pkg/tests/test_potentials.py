"""
Unit tests for the potentials module.
"""

import json
import tempfile
from pathlib import Path

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from src.errors import ParameterError, UnsupportedOrderError
from src.potentials import (
    CallablePotential,
    ConstantPotential,
    SurisParams,
    SurisPotential,
    TrigPerturbation,
    cr_norm,
    grid_c1_norm,
    helper_alpha_beta_gamma_D,
    load_potential,
    potential_from_dict,
    random_trig_perturbation,
    suris_increment,
    suris_params_of,
    suris_partial,
    suris_potential,
    suris_v,
    suris_vprime,
    suris_vprime_partial,
    tangent_combination,
)
from src.spectral import TWO_PI

GENERIC = SurisParams(A=0.02, B=-0.01, C=-0.03, D=0.01)


def mp_vprime(params, x):
    mpmath.mp.dps = 40
    X = 2 * mpmath.pi * mpmath.mpf(x)
    A, B, C, D = (mpmath.mpf(v) for v in params.as_array())
    alpha = 1 - A * mpmath.cos(X) + B * mpmath.sin(X) - C * mpmath.cos(2 * X) + D * mpmath.sin(2 * X)
    beta = A * mpmath.sin(X) + B * mpmath.cos(X) + C * mpmath.sin(2 * X) + D * mpmath.cos(2 * X)
    return float(mpmath.atan2(beta, alpha) / mpmath.pi)


class TestSurisParams:
    """Test suite for SurisParams."""

    def test_eccentricity(self):
        assert SurisParams(A=0.03, D=0.04).eccentricity == pytest.approx(0.05)

    def test_cap(self):
        with pytest.raises(ParameterError):
            SurisParams(A=0.2, C=0.2)

    def test_cap_is_value_error(self):
        with pytest.raises(ValueError):
            SurisParams(B=1.0)

    def test_non_finite(self):
        with pytest.raises(ParameterError):
            SurisParams(A=float("nan"))

    def test_special_family(self):
        params = SurisParams.special(0.05)
        assert params.to_dict() == {"A": 0.0, "B": 0.0, "C": -0.05, "D": 0.0}

    def test_shifted(self):
        shifted = GENERIC.shifted([0.01, 0.0, 0.0, -0.01])
        assert_allclose(shifted.as_array(), [0.03, -0.01, -0.03, 0.0])

    def test_hashable_and_cached(self):
        assert suris_potential(SurisParams(C=-0.05)) is suris_potential(SurisParams.special(0.05))


class TestSurisPotential:
    """Test suite for the Suris potential and its derivatives."""

    def setup_method(self):
        """Set up test fixtures."""
        self.V = suris_potential(GENERIC)
        self.x = np.linspace(-0.5, 1.5, 23)

    def test_zero_parameters(self):
        V = suris_potential(SurisParams())
        assert_allclose(V.vprime(self.x), 0.0, atol=0.0)
        assert_allclose(V.value(self.x), 0.0, atol=0.0)

    def test_level_coefficients_at_zero(self):
        lc = helper_alpha_beta_gamma_D(SurisParams(), self.x)
        assert_allclose(lc.alpha, 1.0)
        assert_allclose(lc.beta, 0.0)
        assert_allclose(lc.gamma, 0.0)
        assert_allclose(lc.dcal, 1.0)

    def test_vprime_against_extended_precision(self):
        expected = [mp_vprime(GENERIC, x) for x in self.x]
        assert_allclose(self.V.vprime(self.x), expected, atol=1e-15)

    def test_vsecond_against_central_difference(self):
        h = 1e-6
        numeric = (suris_vprime(GENERIC, self.x + h) - suris_vprime(GENERIC, self.x - h)) / (2 * h)
        assert_allclose(self.V.vsecond(self.x), numeric, atol=1e-8)

    def test_third_derivative_from_table(self):
        h = 1e-5
        numeric = (self.V.vsecond(self.x + h) - self.V.vsecond(self.x - h)) / (2 * h)
        assert_allclose(self.V.derivative(self.x, 3), numeric, atol=1e-6)

    def test_value_is_integral_of_vprime(self):
        for x in (0.1, 0.37, 0.9, 1.25):
            expected, _ = quad(lambda s: float(suris_vprime(GENERIC, s)), 0.0, x,
                               epsabs=1e-14, epsrel=1e-14)
            assert float(self.V.value(x)) == pytest.approx(expected, abs=1e-13)

    def test_periodic(self):
        assert float(self.V.value(1.0)) == pytest.approx(0.0, abs=1e-14)
        assert_allclose(self.V.value(self.x + 1.0), self.V.value(self.x), atol=1e-13)

    @pytest.mark.parametrize("which", ["A", "B", "C", "D"])
    def test_parameter_partials(self, which):
        h = 1e-6
        index = "ABCD".index(which)
        step = np.zeros(4)
        step[index] = h
        plus = suris_vprime(GENERIC.shifted(step), self.x)
        minus = suris_vprime(GENERIC.shifted(-step), self.x)
        assert_allclose(suris_vprime_partial(GENERIC, which, self.x), (plus - minus) / (2 * h), atol=1e-8)

    def test_partial_potential_is_integral(self):
        expected, _ = quad(lambda s: float(suris_vprime_partial(GENERIC, "C", s)), 0.0, 0.4,
                           epsabs=1e-14, epsrel=1e-14)
        assert float(self.V.partial("C", 0.4)) == pytest.approx(expected, abs=1e-13)

    def test_unknown_parameter(self):
        with pytest.raises(ParameterError):
            self.V.partial("E", 0.1)

    def test_partials_at_zero_eccentricity(self):
        zero = SurisParams()
        assert float(suris_partial(zero, "A", 0.25)) == pytest.approx(1.0 / (2 * np.pi ** 2), abs=1e-14)
        assert float(suris_partial(zero, "B", 0.5)) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("which", ["A", "B", "C", "D"])
    def test_partial_against_parameter_difference(self, which):
        h = 1e-6
        step = np.zeros(4)
        step["ABCD".index(which)] = h
        numeric = (suris_v(GENERIC.shifted(step), self.x) - suris_v(GENERIC.shifted(-step), self.x)) / (2 * h)
        assert_allclose(suris_partial(GENERIC, which, self.x), numeric, atol=1e-6)

    def test_quasi_periodicity(self):
        shift = suris_v(GENERIC, self.x + 1.0) - suris_v(GENERIC, self.x)
        assert_allclose(shift, float(suris_v(GENERIC, 1.0)), atol=1e-13)

    def test_level_coefficients_identity(self):
        lc = helper_alpha_beta_gamma_D(GENERIC, self.x)
        assert_allclose(lc.dcal ** 2, lc.alpha ** 2 + lc.beta ** 2, rtol=1e-14)
        eps = 0.1
        special = helper_alpha_beta_gamma_D(SurisParams.special(eps), self.x)
        expected = np.sqrt(1 + eps ** 2 + 2 * eps * np.cos(4 * np.pi * self.x))
        assert_allclose(special.dcal, expected, rtol=1e-14)


class TestCombinations:
    """Test suite for perturbations, sums and norms."""

    def setup_method(self):
        """Set up test fixtures."""
        self.x = np.linspace(0.0, 1.0, 17)
        self.W = TrigPerturbation([0.1], [0.0, 0.05])

    def test_trig_derivatives(self):
        assert_allclose(self.W.value(self.x),
                        0.1 * np.cos(TWO_PI * self.x) + 0.05 * np.sin(2 * TWO_PI * self.x), atol=1e-15)
        assert_allclose(self.W.vprime(self.x),
                        -0.1 * TWO_PI * np.sin(TWO_PI * self.x)
                        + 0.05 * 2 * TWO_PI * np.cos(2 * TWO_PI * self.x), atol=1e-14)
        assert_allclose(self.W.vsecond(self.x),
                        -0.1 * TWO_PI ** 2 * np.cos(TWO_PI * self.x)
                        - 0.05 * (2 * TWO_PI) ** 2 * np.sin(2 * TWO_PI * self.x), atol=1e-12)

    def test_arithmetic(self):
        V = suris_potential(GENERIC)
        total = V + self.W
        assert_allclose(total.vprime(self.x), V.vprime(self.x) + self.W.vprime(self.x))
        assert_allclose((total - self.W).value(self.x), V.value(self.x), atol=1e-15)
        assert_allclose((2 * self.W).value(self.x), 2 * self.W.value(self.x))
        assert_allclose((self.W * 0.5).vsecond(self.x), 0.5 * self.W.vsecond(self.x))

    def test_constant(self):
        c = ConstantPotential(0.7)
        assert_allclose(c.value(self.x), 0.7)
        assert_allclose(c.vprime(self.x), 0.0)
        assert cr_norm(c, 1) == pytest.approx(0.7)

    def test_cr_norm_of_harmonic(self):
        W = TrigPerturbation([0.0, 0.01])
        assert cr_norm(W, 0) == pytest.approx(0.01, abs=1e-15)
        assert cr_norm(W, 1) == pytest.approx(4 * np.pi * 0.01, abs=1e-12)

    def test_cr_norm_negative_order(self):
        with pytest.raises(ParameterError):
            cr_norm(self.W, -1)

    def test_callable_potential(self):
        W = CallablePotential(lambda x: 0.02 * np.cos(TWO_PI * x), nodes=256)
        assert W.grid_accurate_only
        assert_allclose(W.vprime(self.x), -0.02 * TWO_PI * np.sin(TWO_PI * self.x), atol=1e-12)
        with pytest.raises(UnsupportedOrderError):
            W.derivative(self.x, 3)
        with pytest.raises(UnsupportedOrderError):
            cr_norm(W, 3)
        assert (W + self.W).grid_accurate_only

    def test_tangent_combination_is_first_order(self):
        base = SurisParams.special(0.05)
        direction = np.array([1.0, -0.5, 0.3, 0.8])

        def gap(scale):
            increment = scale * direction
            return grid_c1_norm(suris_increment(base, increment) - tangent_combination(base, increment))

        ratio = gap(2e-3) / gap(1e-3)
        assert 3.5 < ratio < 4.5

    def test_random_perturbation_is_seeded(self):
        first = random_trig_perturbation(7)
        second = random_trig_perturbation(7)
        assert_allclose(first.cos_coeffs, second.cos_coeffs)
        assert not np.allclose(first.cos_coeffs, random_trig_perturbation(8).cos_coeffs)
        assert cr_norm(first, 0) < 0.1


class TestDocuments:
    """Test suite for potential JSON documents."""

    def test_round_trip(self):
        V = suris_potential(GENERIC) + TrigPerturbation([0.001], [0.0, 0.002])
        rebuilt = potential_from_dict(json.loads(json.dumps(V.to_dict())))
        x = np.linspace(0.0, 1.0, 11)
        assert_allclose(rebuilt.value(x), V.value(x), atol=1e-15)

    def test_empty_document(self):
        assert potential_from_dict({}).value(0.3) == 0.0

    def test_unknown_key(self):
        with pytest.raises(ParameterError):
            potential_from_dict({"suris": {"A": 0.0}, "lennard-jones": 1})

    def test_load_reports_path(self):
        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            f.write("{not json")
            temp_path = f.name
        try:
            with pytest.raises(ParameterError, match=Path(temp_path).name):
                load_potential(temp_path)
        finally:
            Path(temp_path).unlink()

    def test_load_rejects_eccentric_params(self):
        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            json.dump({"suris": {"A": 0.3}}, f)
            temp_path = f.name
        try:
            with pytest.raises(ParameterError):
                load_potential(temp_path)
        finally:
            Path(temp_path).unlink()

    def test_suris_params_of(self):
        assert suris_params_of(suris_potential(GENERIC)) == GENERIC
        assert isinstance(suris_potential(GENERIC), SurisPotential)
        with pytest.raises(ParameterError):
            suris_params_of(TrigPerturbation([0.1]))
