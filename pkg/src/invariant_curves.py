"""
Invariant Curves Module

Explicit invariant graphs y = psi(x) of the Suris map on level sets of the
first integral, rotation numbers on them and the inverse problem of finding
the curve with a prescribed rotation number.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .dynamics import PhasePoint, first_integral, integral_range, step
from .errors import DomainError, NonMonotoneError, NotAttainableError, ParameterError
from .potentials import SurisParams, helper_alpha_beta_gamma_D, suris_potential, suris_vprime
from .spectral import TWO_PI, FourierSeries, uniform_grid

logger = logging.getLogger(__name__)

CURVE_NODES = 2048
SCAN_NODES = 512
SCAN_POINTS = 64
CLAMP_TOLERANCE = 1e-12
WORKING_WINDOW = (-0.9, 0.9)
WINDOW_MARGIN = 1e-9
LEVEL_XTOL = 1e-13
BIRKHOFF_STEPS = 20000


def clamped_arccos(argument):
    """arccos with arguments up to CLAMP_TOLERANCE outside [-1, 1] clamped."""
    argument = np.asarray(argument, dtype=float)
    if np.any(np.abs(argument) > 1.0 + CLAMP_TOLERANCE):
        worst = float(np.abs(argument).max())
        raise DomainError(f"arccos argument {worst:.15g} outside [-1, 1]")
    return np.arccos(np.clip(argument, -1.0, 1.0))


def level_density(params: SurisParams, eta: float, x):
    """1 / sqrt(D^2 - (eta - gamma)^2), the unnormalized angle density on I = eta."""
    lc = helper_alpha_beta_gamma_D(params, x)
    gap = lc.dcal ** 2 - (eta - lc.gamma) ** 2
    if np.any(gap <= 0.0):
        raise DomainError(f"level {eta!r} does not project over the whole circle")
    return 1.0 / np.sqrt(gap)


class LevelAngle:
    """Normalized angle theta_eta(x) on the level I = eta, as a lift of the circle."""

    def __init__(self, params: SurisParams, eta: float, nodes: int = CURVE_NODES):
        self.params = params
        self.eta = float(eta)
        self.series = FourierSeries(level_density(params, eta, uniform_grid(nodes)))
        self.normalization = self.series.mean

    def __call__(self, x):
        return self.series.antiderivative(x) / self.normalization

    def derivative(self, x):
        return level_density(self.params, self.eta, x) / self.normalization


def admissible_levels(params: SurisParams, nodes: int = 4096) -> Tuple[float, float]:
    """Levels eta whose set {I = eta} is a pair of graphs over the full circle."""
    grid = uniform_grid(nodes)
    lc = helper_alpha_beta_gamma_D(params, grid)
    return float(np.max(lc.gamma - lc.dcal)), float(np.min(lc.gamma + lc.dcal))


def working_levels(params: SurisParams) -> Tuple[float, float]:
    lo, hi = admissible_levels(params)
    lo = max(lo, WORKING_WINDOW[0]) + WINDOW_MARGIN
    hi = min(hi, WORKING_WINDOW[1]) - WINDOW_MARGIN
    if lo >= hi:
        raise DomainError(f"no admissible levels for {params!r}")
    return lo, hi


@dataclass(frozen=True)
class CurveParams:
    """Level eta, branch sigma = ±1 and sheet k of an invariant graph."""

    eta: float
    sigma: int = 1
    k: int = 0

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ParameterError(f"branch must be +1 or -1, got {self.sigma}")


def _graph(params: SurisParams, curve: CurveParams, x):
    lc = helper_alpha_beta_gamma_D(params, x)
    arc = clamped_arccos((lc.gamma - curve.eta) / lc.dcal)
    return curve.sigma * arc / TWO_PI - 0.5 * suris_vprime(params, x) + curve.k


def rotation_number_from_chart(params: SurisParams, curve: CurveParams,
                               nodes: int = CURVE_NODES) -> float:
    """
    Rotation number as the angle increment of a single step.

    The map acts on theta_eta as a rigid rotation, so one step from x = 0
    measures it exactly.
    """
    angle = LevelAngle(params, curve.eta, nodes)
    y0 = float(_graph(params, curve, 0.0))
    x1 = y0 + float(suris_vprime(params, 0.0))
    return float(angle(x1) - angle(0.0))


class InvariantCurve:
    """
    Invariant graph y = psi(x) of the Suris map.

    Attributes:
        params: Owning Suris parameters
        curve: Level, branch and sheet
        grid: x-nodes of the table
        values: psi on the grid
    """

    def __init__(self, params: SurisParams, curve: CurveParams, nodes: int = CURVE_NODES):
        lo, hi = integral_range(params)
        if not lo - CLAMP_TOLERANCE <= curve.eta <= hi + CLAMP_TOLERANCE:
            raise DomainError(f"level {curve.eta!r} outside the integral range ({lo:.12g}, {hi:.12g})")
        self.params = params
        self.curve = curve
        self.grid = uniform_grid(nodes)
        self.values = _graph(params, curve, self.grid)
        self.measured_rotation: Optional[float] = None

    @property
    def eta(self) -> float:
        return self.curve.eta

    def psi(self, x):
        """Height of the graph over ``x``."""
        return _graph(self.params, self.curve, x)

    __call__ = psi

    def level_residual(self) -> float:
        """max |I(x, psi(x)) - eta| over the table."""
        return float(np.abs(first_integral(self.params, self.grid, self.values) - self.eta).max())

    def invariance_residual(self, samples: int = 256) -> float:
        """max over sampled x of |y' - psi(x')| for (x', y') = F(x, psi(x))."""
        x = np.arange(samples) / samples
        image = step(suris_potential(self.params), PhasePoint(x, self.psi(x)))
        return float(np.abs(image.y - self.psi(image.x)).max())

    def rotation_number(self) -> float:
        return rotation_number_from_chart(self.params, self.curve, self.grid.size)

    def rotation_number_on_curve(self, n: int = BIRKHOFF_STEPS) -> float:
        return self.rotation_number_bracket(n)[0]

    def rotation_number_bracket(self, n: int = BIRKHOFF_STEPS) -> Tuple[float, float]:
        """
        Birkhoff averages (x_n - x_0)/n and (x_2n - x_0)/(2n) from (0, psi(0)).

        Raises:
            DomainError: If the orbit drifts off the level set
        """
        if n < 1:
            raise ParameterError(f"number of steps must be positive, got {n}")
        V = suris_potential(self.params)
        x0 = 0.0
        z = PhasePoint(x0, float(self.psi(x0)))
        x_n = None
        for index in range(1, 2 * n + 1):
            z = step(V, z)
            if index == n:
                x_n = z.x
        drift = abs(float(first_integral(self.params, z.x, z.y)) - self.eta)
        if drift > 1e-6:
            raise DomainError(f"orbit left the level set (drift {drift:.3g})")
        return (x_n - x0) / n, (z.x - x0) / (2 * n)


def psi(curve: InvariantCurve, x):
    return curve.psi(x)


def rotation_number_on_curve(curve: InvariantCurve, n: int = BIRKHOFF_STEPS) -> float:
    return curve.rotation_number_on_curve(n)


def _scan(params: SurisParams, sigma: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = working_levels(params)
    etas = np.linspace(lo, hi, SCAN_POINTS)
    rhos = np.array([
        rotation_number_from_chart(params, CurveParams(eta, sigma, k), SCAN_NODES) for eta in etas
    ])
    steps = np.diff(rhos) * sigma
    if np.any(steps <= 0.0):
        bad = int(np.argmax(steps <= 0.0))
        raise NonMonotoneError(
            f"rotation number not monotone near eta={etas[bad]:.6g} for {params!r}"
        )
    return etas, rhos


def rotation_interval(params: SurisParams, sigma: int = 1, k: int = 0) -> Tuple[float, float]:
    """Measured interval of rotation numbers on the working window."""
    _, rhos = _scan(params, sigma, k)
    return float(rhos.min()), float(rhos.max())


def _rebracket(mismatch, etas: np.ndarray, index: int, rho: float) -> float:
    """Root of ``mismatch`` in the scan cells around ``index``."""
    lo, hi = max(index - 2, 0), min(index + 1, len(etas) - 1)
    points = etas[lo:hi + 1]
    values = [mismatch(eta) for eta in points]
    for a, b, fa, fb in zip(points[:-1], points[1:], values[:-1], values[1:]):
        if fa == 0.0:
            return float(a)
        if fa * fb < 0.0:
            logger.debug("rho=%r re-bracketed in [%.12g, %.12g]", rho, min(a, b), max(a, b))
            return float(brentq(mismatch, min(a, b), max(a, b), xtol=LEVEL_XTOL))
    if values[-1] == 0.0:
        return float(points[-1])
    raise NonMonotoneError(f"no sign change of the rotation mismatch near rho={rho!r}")


def curve_for_rotation_number(params: SurisParams, rho: float, sigma: int = 1, k: int = 0,
                              nodes: int = CURVE_NODES) -> InvariantCurve:
    """
    Invariant curve of rotation number ``rho`` on branch (sigma, k).

    A 64-point scan brackets the level, Brent's method refines it.

    Raises:
        NotAttainableError: If rho lies outside the measured interval
        NonMonotoneError: If the scan is not monotone or no bracket survives refinement
    """
    etas, rhos = _scan(params, sigma, k)
    if not rhos.min() <= rho <= rhos.max():
        raise NotAttainableError(
            f"rotation number {rho!r} outside [{rhos.min():.12g}, {rhos.max():.12g}]"
        )

    def mismatch(eta):
        return rotation_number_from_chart(params, CurveParams(eta, sigma, k), nodes) - rho

    order = np.argsort(rhos)
    index = int(np.searchsorted(rhos[order], rho))
    index = min(max(index, 1), len(etas) - 1)
    a, b = etas[order][index - 1], etas[order][index]
    fa, fb = mismatch(a), mismatch(b)
    if fa == 0.0:
        eta = a
    elif fb == 0.0:
        eta = b
    elif fa * fb > 0.0:
        # scan tables are coarser than the refined charts; search the neighbouring cells
        eta = _rebracket(mismatch, etas[order], index, rho)
    else:
        eta = brentq(mismatch, a, b, xtol=LEVEL_XTOL)

    curve = InvariantCurve(params, CurveParams(float(eta), sigma, k), nodes)
    curve.measured_rotation = mismatch(eta) + rho
    logger.debug("curve for rho=%r: eta=%.15g", rho, eta)
    return curve
