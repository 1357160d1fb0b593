"""
Deformed Basis Module

Weighted inner product on the circle, the reference families e_q, E_q and
their deformations, the deformed Riesz basis f_q built from angle charts,
Gram matrices and the projector onto the low modes {f_0, f_±1, f_±2}.
"""

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Sequence, Union

import numpy as np
from scipy.linalg import eigh, solve

from .action_angle import AngleChart, build_chart
from .config import parallel_map
from .errors import GridMismatchError, ParameterError, SingularGramError
from .potentials import Potential, SurisParams, suris_potential
from .spectral import TWO_PI, sampled_cr_norm, uniform_grid

logger = logging.getLogger(__name__)

BASIS_NODES = 2048
LOW_MODES = (0, 1, -1, 2, -2)
QUARTER = Fraction(1, 4)
ROTATION_TABLE = {
    3: Fraction(1, 3),
    4: Fraction(1, 4),
    5: Fraction(2, 5),
    6: Fraction(1, 6),
    7: Fraction(2, 7),
    8: Fraction(1, 4),
}
SINGULAR_RATIO = 1e-12
DERIVATIVE_STEP = 1e-3

Samples = Union[np.ndarray, Potential]


class RationalAssignment(NamedTuple):
    """q = 4 p + t with chart rotation number r = p / q."""

    p: int
    t: int
    r: Fraction


def r_q_assignment(q: int) -> RationalAssignment:
    """Rotation number of the chart carrying the mode q (|q| >= 3)."""
    q = abs(int(q))
    if q < 3:
        raise ParameterError(f"chart modes start at |q| = 3, got {q}")
    if q in ROTATION_TABLE:
        r = ROTATION_TABLE[q]
        p = r.numerator * q // r.denominator
        return RationalAssignment(p, q - 4 * p, r)
    p, t = divmod(q, 4)
    return RationalAssignment(p, t, Fraction(p, q))


@dataclass(frozen=True)
class BasisVector:
    """Sampled basis function with its origin: constant, parameter or chart mode."""

    q: int
    values: np.ndarray
    provenance: str


@dataclass
class LowModeProjection:
    """
    Projection of W on span{f_0, f_±1, f_±2}.

    The increment (alpha, beta, gamma, delta) multiplies (∂_A V, ∂_B V, ∂_C V, ∂_D V).
    """

    values: np.ndarray
    coefficients: np.ndarray
    w0: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    orthogonality_defect: float

    @property
    def increment(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.delta])


def split_index(c1_norm: float) -> int:
    """q_0 = max(floor(||W||_1^(-1/5)), 8) separating low and high modes."""
    if c1_norm <= 0.0:
        return 8
    return max(int(np.floor(c1_norm ** -0.2)), 8)


class InnerProductContext:
    """
    Quadrature grid, weight theta'_{1/4} and cached charts and basis vectors.

    <f, g> = ∫ f conj(g) theta'_{1/4} dx, by the trapezoid rule.
    """

    def __init__(self, params: SurisParams, nodes: int = BASIS_NODES, threads: int = 1):
        self.params = params
        self.nodes = nodes
        self.threads = threads
        self.grid = uniform_grid(nodes)
        self.quarter_chart = build_chart(params, float(QUARTER), nodes)
        self.weight = self.quarter_chart.derivative(self.grid)
        self.quarter_theta = self.quarter_chart.theta(self.grid)
        self._potential = suris_potential(params)
        self._charts: Dict[Fraction, AngleChart] = {QUARTER: self.quarter_chart}
        self._vectors: Dict[int, BasisVector] = {}
        self._rotation_derivative = None
        self._lock = threading.RLock()

    def weight_integral(self) -> float:
        return float(np.mean(self.weight))

    def sample(self, W: Samples) -> np.ndarray:
        if isinstance(W, Potential):
            return np.asarray(W.value(self.grid), dtype=float)
        values = np.asarray(W)
        if values.shape != self.grid.shape:
            raise GridMismatchError(
                f"samples of shape {values.shape} do not match a grid of {self.nodes} nodes"
            )
        return values

    def inner_product(self, f: Samples, g: Samples) -> complex:
        f, g = self.sample(f), self.sample(g)
        return complex(np.mean(f * np.conj(g) * self.weight))

    def norm(self, f: Samples) -> float:
        return float(np.sqrt(max(self.inner_product(f, f).real, 0.0)))

    def chart(self, r: Fraction) -> AngleChart:
        r = Fraction(r)
        with self._lock:
            if r in self._charts:
                return self._charts[r]
        chart = build_chart(self.params, float(r), self.nodes)
        with self._lock:
            if r not in self._charts:
                logger.debug("chart for rotation number %s built", r)
            return self._charts.setdefault(r, chart)

    def reference_vector(self, q: int) -> np.ndarray:
        """e_0 = 1, E_q for |q| <= 2 and e_q otherwise, in the quarter angle."""
        if q == 0:
            return np.ones(self.nodes, dtype=complex)
        wave = np.exp(1j * TWO_PI * q * self.quarter_theta)
        if abs(q) <= 2:
            return (wave - 1.0) / (1j * TWO_PI * q)
        return wave

    def exponential(self, q: int) -> np.ndarray:
        """e_q = exp(2πi q theta_{1/4})."""
        return np.exp(1j * TWO_PI * q * self.quarter_theta)

    def rotation_derivative(self) -> np.ndarray:
        """u = ∂theta_rho/∂rho at rho = 1/4, by Richardson-refined central differences."""
        with self._lock:
            if self._rotation_derivative is None:
                def angle(rho):
                    return build_chart(self.params, rho, self.nodes).theta(self.grid)

                h = DERIVATIVE_STEP
                coarse = (angle(0.25 + h) - angle(0.25 - h)) / (2 * h)
                fine = (angle(0.25 + h / 2) - angle(0.25 - h / 2)) / h
                self._rotation_derivative = (4.0 * fine - coarse) / 3.0
            return self._rotation_derivative

    def intermediate_vector(self, q: int) -> np.ndarray:
        """e~_q = e_q U^{t_q} with U = exp(iπu/2)."""
        assignment = r_q_assignment(q)
        t = assignment.t if q > 0 else -assignment.t
        u = self.rotation_derivative()
        return self.exponential(q) * np.exp(0.5j * np.pi * t * u)

    def basis_vector(self, q: int) -> BasisVector:
        with self._lock:
            if q in self._vectors:
                return self._vectors[q]
        if q < 0:
            positive = self.basis_vector(-q)
            vector = BasisVector(q, np.conj(positive.values), positive.provenance)
        elif q == 0:
            vector = BasisVector(0, np.ones(self.nodes, dtype=complex), "constant")
        elif q <= 2:
            real_name, imag_name = ("B", "A") if q == 1 else ("D", "C")
            values = np.pi * (self._potential.partial(real_name, self.grid)
                              + 1j * self._potential.partial(imag_name, self.grid))
            vector = BasisVector(q, values, "parameter")
        else:
            chart = self.chart(r_q_assignment(q).r)
            theta = chart.theta(self.grid)
            values = np.exp(1j * TWO_PI * q * theta) * chart.derivative(self.grid) / self.weight
            vector = BasisVector(q, values, "chart")
        with self._lock:
            self._vectors.setdefault(q, vector)
            return self._vectors[q]

    def coefficient(self, W: Samples, q: int) -> complex:
        """<W, f_q>."""
        return self.inner_product(W, self.basis_vector(q).values)

    def coefficients(self, W: Samples, qs: Sequence[int]) -> List[complex]:
        samples = self.sample(W)
        return parallel_map(lambda q: self.coefficient(samples, q), list(qs), self.threads)

    def gram(self, vectors: Sequence[np.ndarray]) -> np.ndarray:
        """Hermitian Gram matrix (<v_i, v_j>)."""
        F = np.asarray(vectors)
        G = (F * self.weight) @ F.conj().T / self.nodes
        return 0.5 * (G + G.conj().T)

    def gram_low_modes(self) -> np.ndarray:
        """Gram matrix of f_0, f_1, f_-1, f_2, f_-2 in that order."""
        return self.gram([self.basis_vector(q).values for q in LOW_MODES])

    def project_low_modes(self, W: Samples) -> LowModeProjection:
        """
        Orthogonal projection of W on the low modes.

        Raises:
            SingularGramError: If the low-mode Gram matrix is numerically singular
        """
        samples = self.sample(W)
        F = np.array([self.basis_vector(q).values for q in LOW_MODES])
        G = self.gram(F)
        eigenvalues = np.linalg.eigvalsh(G)
        if eigenvalues[0] <= SINGULAR_RATIO * eigenvalues[-1]:
            raise SingularGramError(
                f"low-mode Gram matrix is singular (eigenvalues {eigenvalues[0]:.3g} .. {eigenvalues[-1]:.3g})"
            )
        b = np.array([self.inner_product(samples, f) for f in F])
        c = solve(G.T, b)
        projection = c @ F
        residual = samples - projection
        defect = max(abs(self.inner_product(residual, f)) for f in F)
        c0, c1, cm1, c2, cm2 = c
        return LowModeProjection(
            values=projection,
            coefficients=c,
            w0=float(c0.real),
            alpha=float((1j * np.pi * (c1 - cm1)).real),
            beta=float((np.pi * (c1 + cm1)).real),
            gamma=float((1j * np.pi * (c2 - cm2)).real),
            delta=float((np.pi * (c2 + cm2)).real),
            orthogonality_defect=float(defect),
        )

    def tangent_vector(self, increment: Sequence[float]) -> np.ndarray:
        """Real combination α∂_A V + β∂_B V + γ∂_C V + δ∂_D V written in f-coordinates."""
        alpha, beta, gamma, delta = (float(v) for v in increment)
        c1 = (beta - 1j * alpha) / TWO_PI
        c2 = (delta - 1j * gamma) / TWO_PI
        values = (c1 * self.basis_vector(1).values + np.conj(c1) * self.basis_vector(-1).values
                  + c2 * self.basis_vector(2).values + np.conj(c2) * self.basis_vector(-2).values)
        return values.real

    def riesz_defect(self, N: int) -> float:
        """
        Finite-section estimate of ||T - I|| on modes |q| <= N.

        T maps the reference frame b_q (1, E_q, e_q) to f_q; the estimate is
        the largest generalized eigenvalue of (Gram(f - b), Gram(b)), square-rooted.
        """
        if N < 2 or N > 64:
            raise ParameterError(f"finite section size must lie in 2..64, got {N}")
        modes = [0] + [s * q for q in range(1, N + 1) for s in (1, -1)]
        reference = [self.reference_vector(q) for q in modes]
        difference = [self.basis_vector(q).values - b for q, b in zip(modes, reference)]
        eigenvalues = eigh(self.gram(difference), self.gram(reference), eigvals_only=True)
        return float(np.sqrt(max(eigenvalues[-1], 0.0)))

    def norm_equivalence_ratio(self, phi: np.ndarray) -> float:
        """||phi||_ctx / ||phi||_{C^1 grid} for a sampled low-mode combination."""
        return self.norm(phi) / sampled_cr_norm(phi, 1)

    def parseval_ratio(self, W: Samples, qmax: int = 64) -> float:
        """||W||^2 / Σ_{3<=|q|<=qmax} |<W, f_q>|^2."""
        qs = [s * q for q in range(3, qmax + 1) for s in (1, -1)]
        energy = sum(abs(c) ** 2 for c in self.coefficients(W, qs))
        return self.norm(W) ** 2 / energy

    def high_mode_energy(self, W: Samples, q0: int, qmax: int = 64) -> float:
        """Σ_{q0<|q|<=qmax} |<W, f_q>|^2."""
        qs = [s * q for q in range(q0 + 1, qmax + 1) for s in (1, -1)]
        return float(sum(abs(c) ** 2 for c in self.coefficients(W, qs)))


def inner_product(ctx: InnerProductContext, f: Samples, g: Samples) -> complex:
    return ctx.inner_product(f, g)


def basis_vector(ctx: InnerProductContext, q: int) -> BasisVector:
    return ctx.basis_vector(q)


def coefficient(ctx: InnerProductContext, W: Samples, q: int) -> complex:
    return ctx.coefficient(W, q)


def gram_low_modes(ctx: InnerProductContext) -> np.ndarray:
    return ctx.gram_low_modes()


def project_low_modes(ctx: InnerProductContext, W: Samples) -> LowModeProjection:
    return ctx.project_low_modes(W)


def riesz_defect(ctx: InnerProductContext, N: int) -> float:
    return ctx.riesz_defect(N)


def closed_form_low_gram() -> np.ndarray:
    """Gram matrix of 1, E_1, E_-1, E_2, E_-2 under the flat weight."""
    G = np.zeros((5, 5), dtype=complex)
    for i, p in enumerate(LOW_MODES):
        for j, q in enumerate(LOW_MODES):
            if p == 0 and q == 0:
                G[i, j] = 1.0
            elif p == 0:
                G[i, j] = 1.0 / (1j * TWO_PI * q)
            elif q == 0:
                G[i, j] = -1.0 / (1j * TWO_PI * p)
            else:
                G[i, j] = ((p == q) + 1.0) / (TWO_PI ** 2 * p * q)
    return G
