"""
Periodic Fourier tables.

Smooth 1-periodic functions sampled on a uniform grid are represented by
their trigonometric interpolant, which can then be evaluated, differentiated
and integrated at arbitrary points with spectral accuracy.
"""

from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

TWO_PI = 2.0 * np.pi


def uniform_grid(nodes: int) -> np.ndarray:
    """Return the nodes j/n, j = 0..n-1, of the periodic trapezoid rule."""
    if nodes < 4:
        raise ValueError(f"grid needs at least 4 nodes, got {nodes}")
    return np.arange(nodes) / nodes


class FourierSeries:
    """Trigonometric interpolant of samples taken on ``uniform_grid(n)``."""

    def __init__(self, samples, cutoff: float = 1e-18):
        """
        Build the series.

        Args:
            samples: Real values of a 1-periodic function at j/n
            cutoff: Modes below ``cutoff`` (relative to max(1, |f|)) are dropped
        """
        samples = np.asarray(samples, dtype=float)
        nodes = samples.size
        if nodes < 4:
            raise ValueError(f"need at least 4 samples, got {nodes}")
        coefficients = np.fft.rfft(samples) / nodes
        # the Nyquist mode of an even grid is ambiguous and dropped
        coefficients = coefficients[: (nodes - 1) // 2 + 1]
        self.nodes = nodes
        self.mean = float(coefficients[0].real)
        modes = coefficients[1:]
        scale = max(float(np.abs(modes).max(initial=0.0)), abs(self.mean), 1.0)
        significant = np.nonzero(np.abs(modes) > cutoff * scale)[0]
        keep = int(significant[-1]) + 1 if significant.size else 0
        self.coefficients = modes[:keep]
        self.wavenumbers = np.arange(1, keep + 1)

    def _phases(self, x: np.ndarray) -> np.ndarray:
        return np.exp(1j * TWO_PI * np.multiply.outer(x, self.wavenumbers))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not self.coefficients.size:
            return np.full(x.shape, self.mean) if x.shape else self.mean
        return self.mean + 2.0 * (self._phases(x) @ self.coefficients).real

    def derivative(self, x, order: int = 1):
        """Evaluate the ``order``-th derivative of the interpolant."""
        if order == 0:
            return self(x)
        x = np.asarray(x, dtype=float)
        if not self.coefficients.size:
            return np.zeros(x.shape) if x.shape else 0.0
        factors = (1j * TWO_PI * self.wavenumbers) ** order
        return 2.0 * (self._phases(x) @ (self.coefficients * factors)).real

    def antiderivative(self, x):
        """Evaluate the integral of the interpolant from 0 to ``x``."""
        x = np.asarray(x, dtype=float)
        linear = self.mean * x
        if not self.coefficients.size:
            return linear
        weights = self.coefficients / (1j * TWO_PI * self.wavenumbers)
        periodic = 2.0 * ((self._phases(x) - 1.0) @ weights).real
        return linear + periodic


def grid_sup(func: Callable[[np.ndarray], np.ndarray], nodes: int,
             polish_band: float = 1e-4) -> float:
    """
    Supremum of |func| over one period.

    The maximum over the uniform grid is polished with a bounded scalar
    search around every node within ``polish_band`` of the grid maximum.
    """
    grid = uniform_grid(nodes)
    values = np.abs(np.asarray(func(grid), dtype=float))
    best = float(values.max())
    if best == 0.0:
        return 0.0
    spacing = 1.0 / nodes
    candidates = np.nonzero(values >= (1.0 - polish_band) * best)[0]
    for index in candidates[:32]:
        centre = grid[index]
        result = minimize_scalar(
            lambda t: -abs(float(func(np.array([t]))[0])),
            bounds=(centre - spacing, centre + spacing),
            method="bounded",
            options={"xatol": 1e-13},
        )
        best = max(best, -float(result.fun))
    return best


def sampled_cr_norm(samples, order: int) -> float:
    """C^r norm (max over derivative orders) of a grid-sampled periodic function."""
    samples = np.asarray(samples)
    grid = uniform_grid(samples.size)
    if np.iscomplexobj(samples):
        real_part = FourierSeries(samples.real)
        imag_part = FourierSeries(samples.imag)
        return max(
            float(np.abs(real_part.derivative(grid, m) + 1j * imag_part.derivative(grid, m)).max())
            for m in range(order + 1)
        )
    series = FourierSeries(samples)
    return max(float(np.abs(series.derivative(grid, m)).max()) for m in range(order + 1))
