"""
Orbit Solver Module

Variational (p, q)-periodic configurations of the Frenkel-Kontorova model:
free and pinned action minimizers, actions, Mather's beta on rationals and
the deviation measurements between Suris and perturbed orbits.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import lstsq, solve_banded
from scipy.optimize import minimize_scalar

from .config import parallel_map
from .dynamics import fk_residual, generating_h
from .errors import NoConvergenceError, ParameterError
from .invariant_curves import curve_for_rotation_number
from .potentials import Potential, SurisParams, suris_potential

logger = logging.getLogger(__name__)

MAX_NEWTON = 200
MAX_GRADIENT = 2000
RESIDUAL_TOL = 1e-10
NEWTON_TARGET = 1e-13
GRADIENT_RATE = 0.2
SEED_SCAN = 16
SEED_XTOL = 1e-10
ACTION_SLACK = 1e-12
LSTSQ_CUTOFF = 1e-10
SPECTRUM_WINDOW = (Fraction(1, 6), Fraction(1, 3))


@dataclass
class PeriodicConfiguration:
    """
    Lifted points x_0..x_{q-1} of a (p, q) configuration, x_q = x_0 + p.

    Attributes:
        p: Winding number
        q: Period
        points: x_0..x_{q-1}
        pin: Fixed x_0 of a pinned solve
        residual: Sup-norm FK residual reached
        iterations: Solver iterations spent
    """

    p: int
    q: int
    points: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pin: Optional[float] = None
    residual: float = float("nan")
    iterations: int = 0

    def __post_init__(self):
        validate_rational(self.p, self.q)
        self.points = np.asarray(self.points, dtype=float)

    def extended(self) -> np.ndarray:
        """x_{-1}, x_0, ..., x_q."""
        return np.concatenate(([self.points[-1] - self.p], self.points, [self.points[0] + self.p]))

    def shifted(self, delta: float) -> "PeriodicConfiguration":
        pin = None if self.pin is None else self.pin + delta
        return PeriodicConfiguration(self.p, self.q, self.points + delta, pin,
                                     self.residual, self.iterations)


@dataclass(frozen=True)
class ActionValue:
    value: float
    p: int
    q: int
    pinned: bool = False
    pin: Optional[float] = None


@dataclass
class SpectrumEntry:
    p: int
    q: int
    action: Optional[float]
    residual: Optional[float] = None
    error: Optional[str] = None


def validate_rational(p: int, q: int):
    if q < 1:
        raise ParameterError(f"period must be positive, got q={q}")
    if math.gcd(p, q) != 1:
        raise ParameterError(f"p/q must be reduced, got {p}/{q}")


def rationals_in_window(qmax: int, window: Tuple[Fraction, Fraction] = SPECTRUM_WINDOW) -> List[Tuple[int, int]]:
    """Reduced p/q in the closed window with q <= qmax, sorted by value then q."""
    lo, hi = window
    found = {Fraction(p, q) for q in range(1, qmax + 1) for p in range(0, q + 1)
             if lo <= Fraction(p, q) <= hi}
    return [(r.numerator, r.denominator) for r in sorted(found)]


def fk_residuals(V: Potential, config: PeriodicConfiguration) -> np.ndarray:
    """Cyclic FK residuals at x_0..x_{q-1}."""
    x = config.extended()
    return fk_residual(V, x[:-2], x[1:-1], x[2:])


def action(V: Potential, config: PeriodicConfiguration) -> ActionValue:
    """A_V = Σ_{i<q} H_V(x_i, x_{i+1}), accumulated with compensated summation."""
    x = np.append(config.points, config.points[0] + config.p)
    terms = np.atleast_1d(generating_h(V, x[:-1], x[1:]))
    return ActionValue(math.fsum(terms.tolist()), config.p, config.q,
                       config.pin is not None, config.pin)


def _rigid(p: int, q: int, x0: float) -> np.ndarray:
    return x0 + np.arange(q) * (p / q)


def _pinned_residual(V: Potential, pin: float, p: int, interior: np.ndarray) -> np.ndarray:
    x = np.concatenate(([pin], interior, [pin + p]))
    return fk_residual(V, x[:-2], x[1:-1], x[2:])


def _solve_pinned(V: Potential, p: int, q: int, pin: float, tol: float) -> PeriodicConfiguration:
    if q == 1:
        config = PeriodicConfiguration(p, q, [pin], pin)
        config.residual = float(abs(fk_residuals(V, config)[0]))
        if config.residual > tol:
            raise NoConvergenceError(f"pinned {p}/1 point x0={pin} is not critical", config.residual, 0)
        return config

    interior = _rigid(p, q, pin)[1:]
    best_interior, best = interior.copy(), np.inf
    iterations = 0

    def newton(x, budget):
        nonlocal best_interior, best, iterations
        for _ in range(budget):
            residual = _pinned_residual(V, pin, p, x)
            size = float(np.abs(residual).max())
            stalled = size <= tol and size > 0.5 * best
            if size < best:
                best, best_interior = size, x.copy()
            if size <= NEWTON_TARGET or stalled:
                break
            banded = np.zeros((3, x.size))
            banded[0, 1:] = 1.0
            banded[1] = -2.0 - V.vsecond(x)
            banded[2, :-1] = 1.0
            x = x - solve_banded((1, 1), banded, residual)
            iterations += 1
        return x

    interior = newton(interior, MAX_NEWTON)
    if best > tol:
        logger.warning("pinned Newton stalled at %.3g for %d/%d, falling back to gradient descent",
                       best, p, q)
        x = best_interior.copy()
        for _ in range(MAX_GRADIENT):
            x = x + GRADIENT_RATE * _pinned_residual(V, pin, p, x)
            iterations += 1
        newton(x, MAX_NEWTON)
    if best > tol:
        raise NoConvergenceError(f"pinned {p}/{q} orbit from x0={pin} did not converge",
                                 best, iterations)
    config = PeriodicConfiguration(p, q, np.concatenate(([pin], best_interior)), pin, best, iterations)
    return config


def _cyclic_jacobian(V: Potential, x: np.ndarray) -> np.ndarray:
    q = x.size
    J = np.diag(-2.0 - np.atleast_1d(V.vsecond(x)))
    index = np.arange(q)
    np.add.at(J, (index, (index + 1) % q), 1.0)
    np.add.at(J, (index, (index - 1) % q), 1.0)
    return J


def _seed_at(V: Potential, p: int, q: int, x0: float, tol: float) -> Optional[PeriodicConfiguration]:
    if q == 1:
        return PeriodicConfiguration(p, 1, [x0], x0)
    try:
        return _solve_pinned(V, p, q, x0, tol)
    except NoConvergenceError as e:
        logger.debug("seed x0=%.6g skipped: %s", x0, e)
        return None


def _solve_free(V: Potential, p: int, q: int, tol: float) -> PeriodicConfiguration:
    """Best pinned seed over one turn of the circle, refined in x0, then polished by min-norm Newton."""
    spacing = 1.0 / (SEED_SCAN * q)
    cache = {}

    def seed_action(x0):
        x0 = float(x0)
        if x0 not in cache:
            cache[x0] = _seed_at(V, p, q, x0, tol)
        seed = cache[x0]
        return np.inf if seed is None else action(V, seed).value

    scan = np.arange(SEED_SCAN * q) * spacing
    values = [seed_action(x0) for x0 in scan]
    if not np.isfinite(min(values)):
        raise NoConvergenceError(f"no pinned seed converged for the free {p}/{q} orbit", np.inf, 0)
    centre = float(scan[int(np.argmin(values))])
    refined = minimize_scalar(seed_action, bounds=(centre - spacing, centre + spacing),
                              method="bounded", options={"xatol": SEED_XTOL})
    x0 = float(refined.x) if refined.fun < min(values) else centre
    seed_value = seed_action(x0)
    seed = cache[x0]

    config = PeriodicConfiguration(p, q, seed.points.copy(), None, seed.residual, seed.iterations)
    x = config.points
    best, best_x = np.inf, x.copy()
    for _ in range(MAX_NEWTON):
        config.points = x
        residual = fk_residuals(V, config)
        size = float(np.abs(residual).max())
        stalled = size <= tol and size > 0.5 * best
        if size < best:
            best, best_x = size, x.copy()
        if size <= NEWTON_TARGET or stalled:
            break
        dx = lstsq(_cyclic_jacobian(V, x), -residual, cond=LSTSQ_CUTOFF)[0]
        x = x + dx
        config.iterations += 1
    if best > tol:
        raise NoConvergenceError(f"free {p}/{q} orbit did not converge", best, config.iterations)
    config.points, config.residual = best_x, best
    final = action(V, config).value
    if final > seed_value + ACTION_SLACK:
        raise NoConvergenceError(
            f"free {p}/{q} Newton left the minimizing basin ({final:.15g} > {seed_value:.15g})",
            best, config.iterations)
    return config


def minimize_action(V: Potential, p: int, q: int, pin: Optional[float] = None,
                    tol: float = RESIDUAL_TOL) -> PeriodicConfiguration:
    """
    Minimal (p, q)-periodic configuration, free or with x_0 = pin.

    Raises:
        ParameterError: If p/q is not reduced
        NoConvergenceError: If the residual stays above ``tol``
    """
    validate_rational(p, q)
    if pin is not None:
        return _solve_pinned(V, p, q, float(pin), tol)
    return _solve_free(V, p, q, tol)


def beta(V: Potential, p: int, q: int, tol: float = RESIDUAL_TOL) -> float:
    """Mather's beta at p/q: minimal action per period."""
    return action(V, minimize_action(V, p, q, tol=tol)).value / q


def action_spectrum_sample(V: Potential, qmax: int, threads: int = 1,
                           tol: float = RESIDUAL_TOL) -> List[SpectrumEntry]:
    """Actions of free minimizers at reduced p/q in [1/6, 1/3] with q <= qmax."""
    def solve_entry(pq):
        p, q = pq
        try:
            config = minimize_action(V, p, q, tol=tol)
        except NoConvergenceError as e:
            return SpectrumEntry(p, q, None, e.best_residual, str(e))
        return SpectrumEntry(p, q, action(V, config).value, config.residual)

    return parallel_map(solve_entry, rationals_in_window(qmax), threads)


def _pinned_pair(params: SurisParams, W: Potential, p: int, q: int, x0: float,
                 tol: float = RESIDUAL_TOL):
    V_S = suris_potential(params)
    V = V_S + W
    return V_S, V, minimize_action(V_S, p, q, pin=x0, tol=tol), minimize_action(V, p, q, pin=x0, tol=tol)


def orbit_deviation(params: SurisParams, W: Potential, p: int, q: int, x0: float) -> float:
    """max_k |x_k - x'_k| between the Suris and the perturbed pinned orbits."""
    _, _, suris, perturbed = _pinned_pair(params, W, p, q, x0)
    return float(np.abs(suris.points - perturbed.points).max())


def action_deviation(params: SurisParams, W: Potential, p: int, q: int, x0: float) -> float:
    """|A_{V_S+W}(x') - A_{V_S}(x) - Σ_k W(x_k)| with x the Suris pinned orbit."""
    V_S, V, suris, perturbed = _pinned_pair(params, W, p, q, x0)
    linear = math.fsum(np.atleast_1d(W.value(suris.points)).tolist())
    return abs(math.fsum([action(V, perturbed).value, -action(V_S, suris).value, -linear]))


def initial_momentum_deviation(params: SurisParams, W: Potential, p: int, q: int, x0: float) -> float:
    """|y_0 - y'_0| with y_0 = x_0 - x_{-1} for both pinned orbits."""
    _, _, suris, perturbed = _pinned_pair(params, W, p, q, x0)
    y0 = suris.points[0] - (suris.points[-1] - p)
    y0_perturbed = perturbed.points[0] - (perturbed.points[-1] - p)
    return float(abs(y0 - y0_perturbed))


def curve_sandwich_index(params: SurisParams, W: Potential, p: int, q: int, x0: float,
                         slack: float = 1e-12) -> Optional[int]:
    """
    First k where the Suris curve of rotation p/q passes between y_k^- and y_k^+.

    y_k^- = x'_k - x'_{k-1} and y_k^+ = x'_{k+1} - x'_k - V_S'(x'_k) along the
    perturbed pinned configuration x'.
    """
    V_S = suris_potential(params)
    perturbed = minimize_action(V_S + W, p, q, pin=x0)
    curve = curve_for_rotation_number(params, p / q)
    x = perturbed.extended()
    inner = x[1:-1]
    y_minus = inner - x[:-2]
    y_plus = x[2:] - inner - V_S.vprime(inner)
    heights = curve.psi(inner)
    inside = ((np.minimum(y_minus, y_plus) - slack <= heights)
              & (heights <= np.maximum(y_minus, y_plus) + slack))
    hits = np.nonzero(inside)[0]
    return int(hits[0]) if hits.size else None


def rotation_symmetry_residual(V: Potential, x, r: int, k: int):
    """FK residual of the rigid rotation x_j = x + j r/k; equals -V'(x)."""
    shift = r / k
    x = np.asarray(x, dtype=float)
    return fk_residual(V, x - shift, x, x + shift)
