"""
Action-Angle Module

Angle charts theta_rho(x) on invariant curves, the action variable, the
elliptic-integral special case C = -eps and the expansion of the angle in
the action around 1/4.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import ellipk, ellipkinc

from .dynamics import PhasePoint, step
from .errors import DomainError
from .invariant_curves import (
    CURVE_NODES,
    CurveParams,
    InvariantCurve,
    LevelAngle,
    clamped_arccos,
    curve_for_rotation_number,
    rotation_number_from_chart,
    working_levels,
)
from .potentials import SurisParams, helper_alpha_beta_gamma_D, suris_potential
from .spectral import TWO_PI, uniform_grid

logger = logging.getLogger(__name__)

CHART_NODES = CURVE_NODES
INVERSE_TOL = 1e-15
INVERSE_MAX_ITER = 50
EXPANSION_STEP = 1e-3
EXPANSION_OFFSETS = (-0.05, -0.025, -0.0125, 0.0125, 0.025, 0.05)


class AngleChart:
    """
    Angle coordinate on one invariant curve.

    The map acts on theta as the rotation theta -> theta + rho. theta is a
    lift: theta(x + 1) = theta(x) + 1, theta(0) = 0.
    """

    def __init__(self, params: SurisParams, rho: float, eta: float,
                 nodes: int = CHART_NODES, curve: Optional[InvariantCurve] = None):
        self.params = params
        self.rho = float(rho)
        self.eta = float(eta)
        self.curve = curve if curve is not None else InvariantCurve(params, CurveParams(eta), nodes)
        self._angle = LevelAngle(params, eta, nodes)
        self.grid = uniform_grid(nodes)
        self.theta_table = self._angle(self.grid)
        self.derivative_table = self._angle.derivative(self.grid)
        knots_theta = np.append(self.theta_table, 1.0)
        knots_x = np.append(self.grid, 1.0)
        self._inverse_seed = PchipInterpolator(knots_theta, knots_x)

    def theta(self, x):
        return self._angle(x)

    __call__ = theta

    def derivative(self, x):
        return self._angle.derivative(x)

    def inverse(self, theta):
        """x_rho(theta): Newton iterations seeded by a monotone cubic table."""
        theta = np.asarray(theta, dtype=float)
        turns = np.floor(theta)
        x = self._inverse_seed(theta - turns) + turns
        for _ in range(INVERSE_MAX_ITER):
            correction = (self.theta(x) - theta) / self.derivative(x)
            x = x - correction
            if np.all(np.abs(correction) < INVERSE_TOL):
                break
        return x

    def conjugacy_defect(self, seeds: int = 256) -> float:
        """max over seeds of |theta(x1) - theta(x0) - rho| along the curve."""
        x0 = np.arange(seeds) / seeds
        image = step(suris_potential(self.params), PhasePoint(x0, self.curve.psi(x0)))
        return float(np.abs(self.theta(image.x) - self.theta(x0) - self.rho).max())

    def normalization_defect(self) -> float:
        return float(abs(self.theta(1.0) - self.theta(0.0) - 1.0))


def build_chart(params: SurisParams, rho: float, nodes: int = CHART_NODES) -> AngleChart:
    """Chart on the invariant curve (sigma = +1, k = 0) of rotation number ``rho``."""
    curve = curve_for_rotation_number(params, rho, nodes=nodes)
    return AngleChart(params, rho, curve.eta, nodes, curve)


def chart_for_level(params: SurisParams, eta: float, nodes: int = CHART_NODES) -> AngleChart:
    rho = rotation_number_from_chart(params, CurveParams(eta), nodes)
    return AngleChart(params, rho, eta, nodes)


def action_variable(params: SurisParams, eta: float, nodes: int = CHART_NODES) -> float:
    """Omega(eta) = (1/2π) ∫_0^1 arccos((gamma - eta)/D) dx, by the periodic trapezoid rule."""
    lc = helper_alpha_beta_gamma_D(params, uniform_grid(nodes))
    return float(np.mean(clamped_arccos((lc.gamma - eta) / lc.dcal)) / TWO_PI)


def level_for_action(params: SurisParams, omega: float, nodes: int = CHART_NODES) -> float:
    lo, hi = working_levels(params)
    f_lo = action_variable(params, lo, nodes) - omega
    f_hi = action_variable(params, hi, nodes) - omega
    if f_lo * f_hi > 0.0:
        raise DomainError(f"action {omega!r} outside the working window")
    return float(brentq(lambda eta: action_variable(params, eta, nodes) - omega, lo, hi, xtol=1e-14))


def elliptic_F(phi, k):
    """Incomplete elliptic integral of the first kind F(phi, k) (modulus k)."""
    m = np.asarray(k, dtype=float) ** 2
    if np.any(m >= 1.0):
        raise DomainError(f"elliptic modulus must satisfy k^2 < 1, got {k!r}")
    return ellipkinc(phi, m)


def elliptic_K(k):
    """Complete elliptic integral of the first kind K(k) (modulus k)."""
    m = np.asarray(k, dtype=float) ** 2
    if np.any(m >= 1.0):
        raise DomainError(f"elliptic modulus must satisfy k^2 < 1, got {k!r}")
    return ellipk(m)


def special_modulus(eps: float, eta: float) -> float:
    """Modulus k with k^2 = 4 eps / ((1 + eps)^2 - eta^2)."""
    denominator = (1.0 + eps) ** 2 - eta ** 2
    if denominator <= 0.0:
        raise DomainError(f"level {eta!r} outside the special-case range for eps={eps!r}")
    k2 = 4.0 * eps / denominator
    if not 0.0 <= k2 < 1.0:
        raise DomainError(f"k^2 = {k2:.6g} outside [0, 1) for eps={eps!r}, eta={eta!r}")
    return float(np.sqrt(k2))


def rotation_number_special(eps: float, eta: float) -> float:
    """Closed-form rotation number of the level eta when A = B = D = 0, C = -eps."""
    k = special_modulus(eps, eta)
    phi = np.arccos(-eta / (1.0 + eps))
    return float(elliptic_F(phi, k) / (4.0 * elliptic_K(k)))


def elliptic_chart(eps: float, eta: float, x):
    """Closed-form angle F(2πx, k) / 4K(k) in the special case."""
    k = special_modulus(eps, eta)
    return elliptic_F(TWO_PI * np.asarray(x, dtype=float), k) / (4.0 * elliptic_K(k))


@dataclass
class ExpansionTerms:
    """
    theta(Omega, x) = theta_quarter(x) + (Omega - 1/4) u(x) + v(Omega, x).

    Attributes:
        grid: x-nodes
        theta_quarter: angle on the level of action 1/4
        u: Omega-derivative of the angle at 1/4
        omegas: sampled actions near 1/4
        v: remainders, one row per sampled action
        rotation_slope: d rho / d Omega at 1/4
        eta_quarter: level of action 1/4
    """

    grid: np.ndarray
    theta_quarter: np.ndarray
    u: np.ndarray
    omegas: np.ndarray
    v: np.ndarray
    rotation_slope: float
    eta_quarter: float

    def remainder_ratios(self) -> np.ndarray:
        """sup|v(Omega, .)| / (Omega - 1/4)^2 per sampled action."""
        return np.abs(self.v).max(axis=1) / (self.omegas - 0.25) ** 2

    def summary(self) -> Dict[str, float]:
        ratios = self.remainder_ratios()
        return {
            "eta_quarter": self.eta_quarter,
            "theta_identity_gap": float(np.abs(self.theta_quarter - self.grid).max()),
            "u_sup": float(np.abs(self.u).max()),
            "v_ratio_max": float(ratios.max()),
            "v_ratio_min": float(ratios.min()),
            "rotation_slope": self.rotation_slope,
        }


def _richardson(func, centre: float, h: float):
    coarse = (func(centre + h) - func(centre - h)) / (2.0 * h)
    fine = (func(centre + h / 2) - func(centre - h / 2)) / h
    return (4.0 * fine - coarse) / 3.0


def expansion_terms(params: SurisParams, nodes: int = CHART_NODES,
                    offsets: Sequence[float] = EXPANSION_OFFSETS,
                    h: float = EXPANSION_STEP) -> ExpansionTerms:
    """Sample the action-indexed angle expansion around Omega = 1/4."""
    grid = uniform_grid(nodes)

    def angle_at(omega):
        return LevelAngle(params, level_for_action(params, omega, nodes), nodes)(grid)

    def rotation_at(omega):
        return rotation_number_from_chart(params, CurveParams(level_for_action(params, omega, nodes)), nodes)

    eta_quarter = level_for_action(params, 0.25, nodes)
    theta_quarter = LevelAngle(params, eta_quarter, nodes)(grid)
    u = _richardson(angle_at, 0.25, h)
    omegas = 0.25 + np.asarray(offsets, dtype=float)
    v = np.array([angle_at(omega) - theta_quarter - (omega - 0.25) * u for omega in omegas])
    slope = float(_richardson(rotation_at, 0.25, h))
    logger.debug("expansion terms: |u|=%.3g, drho/dOmega=%.12g", float(np.abs(u).max()), slope)
    return ExpansionTerms(grid, theta_quarter, u, omegas, v, slope, eta_quarter)
