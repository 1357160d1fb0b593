"""
Map Dynamics Module

The standard map F_V(x, y) = (x + y + V'(x), y + V'(x)) on the lifted
cylinder, its generating function, the Frenkel-Kontorova residual and the
Suris first integral.
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .potentials import Potential, SurisParams, helper_alpha_beta_gamma_D
from .spectral import TWO_PI, uniform_grid

logger = logging.getLogger(__name__)

RANGE_NODES = 4096


class PhasePoint(NamedTuple):
    """Lifted cylinder point; ``x`` and ``y`` may also be arrays of points."""

    x: float
    y: float

    def reduced(self) -> "PhasePoint":
        return PhasePoint(np.mod(self.x, 1.0), self.y)


@dataclass
class OrbitSegment:
    points: List[PhasePoint] = field(default_factory=list)
    potential_tag: str = ""

    def __len__(self):
        return len(self.points)

    @property
    def xs(self) -> np.ndarray:
        return np.array([z.x for z in self.points])

    @property
    def ys(self) -> np.ndarray:
        return np.array([z.y for z in self.points])


def step(V: Potential, z: PhasePoint) -> PhasePoint:
    """One iterate of F_V."""
    y1 = z.y + V.vprime(z.x)
    return PhasePoint(z.x + y1, y1)


def inverse_step(V: Potential, z: PhasePoint) -> PhasePoint:
    x0 = z.x - z.y
    return PhasePoint(x0, z.y - V.vprime(x0))


def iterate(V: Potential, z: PhasePoint, n: int) -> OrbitSegment:
    """Orbit segment z, F(z), ..., F^n(z)."""
    if n < 0:
        raise ValueError(f"number of steps must be non-negative, got {n}")
    points = [PhasePoint(float(z.x), float(z.y))]
    for _ in range(n):
        nxt = step(V, points[-1])
        points.append(PhasePoint(float(nxt.x), float(nxt.y)))
    return OrbitSegment(points, V.tag)


def iterate_ensemble(V: Potential, x0, y0, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Iterate many initial conditions at once.

    Returns:
        Arrays of shape (n + 1, m) with the x and y coordinates
    """
    x = np.array(x0, dtype=float, ndmin=1)
    y = np.array(y0, dtype=float, ndmin=1)
    xs = np.empty((n + 1, x.size))
    ys = np.empty((n + 1, x.size))
    xs[0], ys[0] = x, y
    for k in range(n):
        z = step(V, PhasePoint(xs[k], ys[k]))
        xs[k + 1], ys[k + 1] = z.x, z.y
    return xs, ys


def generating_h(V: Potential, x1, x2):
    """H_V(x1, x2) = (x2 - x1)^2 / 2 + V(x1)."""
    return 0.5 * (np.asarray(x2) - np.asarray(x1)) ** 2 + V.value(x1)


def fk_residual(V: Potential, xm, x0, xp):
    """x_{+} - 2 x_0 + x_{-} - V'(x_0)."""
    return xp - 2.0 * x0 + xm - V.vprime(x0)


def first_integral(params: SurisParams, x, y):
    """I(x, y) = -alpha(x) cos 2πy + beta(x) sin 2πy + gamma(x)."""
    lc = helper_alpha_beta_gamma_D(params, x)
    angle = TWO_PI * np.asarray(y, dtype=float)
    return -lc.alpha * np.cos(angle) + lc.beta * np.sin(angle) + lc.gamma


def first_integral_dy(params: SurisParams, x, y):
    """∂I/∂y, bounded by 2π(1 + 2ε)."""
    lc = helper_alpha_beta_gamma_D(params, x)
    angle = TWO_PI * np.asarray(y, dtype=float)
    return TWO_PI * (lc.alpha * np.sin(angle) + lc.beta * np.cos(angle))


def suris_phi(params: SurisParams, x, x_next):
    """
    First integral in configuration form.

    Phi(x_n, x_{n+1}) equals I(x_{n+1}, y_{n+1}) along any orbit.
    """
    x = np.asarray(x, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    A, B, C, D = params.A, params.B, params.C, params.D
    return (-np.cos(TWO_PI * (x_next - x))
            + A * (np.cos(TWO_PI * x_next) + np.cos(TWO_PI * x))
            - B * (np.sin(TWO_PI * x_next) + np.sin(TWO_PI * x))
            + C * np.cos(TWO_PI * (x + x_next))
            - D * np.sin(TWO_PI * (x + x_next)))


def _polished_extremum(func, nodes: int, maximize: bool) -> float:
    grid = uniform_grid(nodes)
    values = func(grid)
    index = int(np.argmax(values) if maximize else np.argmin(values))
    sign = -1.0 if maximize else 1.0
    spacing = 1.0 / nodes
    result = minimize_scalar(
        lambda t: sign * float(func(np.array([t]))[0]),
        bounds=(grid[index] - spacing, grid[index] + spacing),
        method="bounded",
        options={"xatol": 1e-13},
    )
    best = float(values[index])
    polished = sign * float(result.fun)
    return max(best, polished) if maximize else min(best, polished)


def integral_range(params: SurisParams, nodes: int = RANGE_NODES) -> Tuple[float, float]:
    """
    Range (Ilo, Ihi) of the first integral over the cylinder.

    Ilo = min_x (gamma - D), Ihi = max_x (gamma + D); grid extrema are
    polished by a bounded scalar search.
    """
    def lower(x):
        lc = helper_alpha_beta_gamma_D(params, x)
        return lc.gamma - lc.dcal

    def upper(x):
        lc = helper_alpha_beta_gamma_D(params, x)
        return lc.gamma + lc.dcal

    return (_polished_extremum(lower, nodes, maximize=False),
            _polished_extremum(upper, nodes, maximize=True))


def jacobian_determinant(V: Potential, z: PhasePoint, h: float = 1e-6) -> float:
    """Central-difference determinant of DF_V at ``z``."""
    columns = []
    for dx, dy in ((h, 0.0), (0.0, h)):
        plus = step(V, PhasePoint(z.x + dx, z.y + dy))
        minus = step(V, PhasePoint(z.x - dx, z.y - dy))
        columns.append(((plus.x - minus.x) / (2 * h), (plus.y - minus.y) / (2 * h)))
    (a, c), (b, d) = columns
    return float(a * d - b * c)


def phase_portrait(V: Potential, seeds: Sequence[PhasePoint], n: int) -> List[Tuple[float, float, int]]:
    """Rows (x mod 1, y, orbit_id) for ``n`` steps from every seed."""
    if not seeds:
        return []
    xs, ys = iterate_ensemble(V, [z.x for z in seeds], [z.y for z in seeds], n)
    rows = []
    for orbit_id in range(len(seeds)):
        for x, y in zip(np.mod(xs[:, orbit_id], 1.0), ys[:, orbit_id]):
            rows.append((float(x), float(y), orbit_id))
    logger.debug("phase portrait: %d orbits x %d steps", len(seeds), n)
    return rows
