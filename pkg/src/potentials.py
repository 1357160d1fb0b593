"""
Potentials Module

Suris potentials, trigonometric perturbations and their combinations,
with x-derivatives, parameter derivatives, C^r norms and JSON documents.
"""

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ParameterError, UnsupportedOrderError
from .spectral import TWO_PI, FourierSeries, grid_sup, uniform_grid

logger = logging.getLogger(__name__)

ECCENTRICITY_CAP = 0.25
TABLE_NODES = 1024
NORM_NODES = 4096
PARAMETER_NAMES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class SurisParams:
    """Parameters (A, B, C, D) of a Suris potential with frequency 2*pi."""

    A: float = 0.0
    B: float = 0.0
    C: float = 0.0
    D: float = 0.0

    def __post_init__(self):
        for name in PARAMETER_NAMES:
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ParameterError(f"parameter {name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.eccentricity > ECCENTRICITY_CAP:
            raise ParameterError(
                f"eccentricity {self.eccentricity:.6g} exceeds the cap {ECCENTRICITY_CAP}"
            )

    @property
    def eccentricity(self) -> float:
        return float(np.sqrt(self.A ** 2 + self.B ** 2 + self.C ** 2 + self.D ** 2))

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.D])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "SurisParams":
        A, B, C, D = (float(v) for v in values)
        return cls(A, B, C, D)

    @classmethod
    def special(cls, eps: float) -> "SurisParams":
        """The one-parameter family A = B = D = 0, C = -eps with elliptic charts."""
        return cls(C=-eps)

    def shifted(self, increment: Sequence[float]) -> "SurisParams":
        return SurisParams.from_array(self.as_array() + np.asarray(increment, dtype=float))

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}


class LevelCoefficients(NamedTuple):
    """Coefficients of I(x, y) = -alpha cos 2πy + beta sin 2πy + gamma."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    dcal: np.ndarray


def helper_alpha_beta_gamma_D(params: SurisParams, x) -> LevelCoefficients:
    """
    Evaluate alpha, beta, gamma and D = hypot(alpha, beta) at ``x``.

    At zero eccentricity the result is (1, 0, 0, 1) everywhere.
    """
    x = np.asarray(x, dtype=float)
    angle = TWO_PI * x
    c1, s1 = np.cos(angle), np.sin(angle)
    c2, s2 = np.cos(2.0 * angle), np.sin(2.0 * angle)
    A, B, C, D = params.A, params.B, params.C, params.D
    alpha = 1.0 - A * c1 + B * s1 - C * c2 + D * s2
    beta = A * s1 + B * c1 + C * s2 + D * c2
    gamma = A * c1 - B * s1
    return LevelCoefficients(alpha, beta, gamma, np.hypot(alpha, beta))


level_coefficients = helper_alpha_beta_gamma_D


def suris_vprime(params: SurisParams, x):
    """V'(x) = (1/π) atan2(beta, alpha); alpha stays above 1 - 2ε > 0."""
    lc = helper_alpha_beta_gamma_D(params, x)
    return np.arctan2(lc.beta, lc.alpha) / np.pi


def suris_vsecond(params: SurisParams, x):
    """Closed-form V''(x)."""
    x = np.asarray(x, dtype=float)
    lc = helper_alpha_beta_gamma_D(params, x)
    angle = TWO_PI * x
    c1, s1 = np.cos(angle), np.sin(angle)
    c2, s2 = np.cos(2.0 * angle), np.sin(2.0 * angle)
    A, B, C, D = params.A, params.B, params.C, params.D
    dalpha = TWO_PI * (A * s1 + B * c1 + 2.0 * C * s2 + 2.0 * D * c2)
    dbeta = TWO_PI * (A * c1 - B * s1 + 2.0 * C * c2 - 2.0 * D * s2)
    return (lc.alpha * dbeta - lc.beta * dalpha) / (np.pi * lc.dcal ** 2)


def suris_vprime_partial(params: SurisParams, which: str, x):
    """Closed-form parameter derivative of V'(x) with respect to ``which``."""
    x = np.asarray(x, dtype=float)
    lc = helper_alpha_beta_gamma_D(params, x)
    harmonic = 1.0 if which in ("A", "B") else 2.0
    angle = harmonic * TWO_PI * x
    cos_part, sin_part = np.cos(angle), np.sin(angle)
    if which in ("A", "C"):
        numerator = lc.alpha * sin_part + lc.beta * cos_part
    elif which in ("B", "D"):
        numerator = lc.alpha * cos_part - lc.beta * sin_part
    else:
        raise ParameterError(f"unknown Suris parameter {which!r}")
    return numerator / (np.pi * lc.dcal ** 2)


class Potential(ABC):
    """A 1-periodic potential with x-derivatives."""

    grid_accurate_only = False
    max_order: Optional[int] = None

    @abstractmethod
    def value(self, x):
        """Evaluate V(x)."""

    @abstractmethod
    def derivative(self, x, order: int = 1):
        """Evaluate the ``order``-th x-derivative."""

    def vprime(self, x):
        return self.derivative(x, 1)

    def vsecond(self, x):
        return self.derivative(x, 2)

    def __call__(self, x):
        return self.value(x)

    def __add__(self, other: "Potential") -> "Potential":
        return SumPotential(self, other)

    def __sub__(self, other: "Potential") -> "Potential":
        return SumPotential(self, ScaledPotential(other, -1.0))

    def __mul__(self, factor: float) -> "Potential":
        return ScaledPotential(self, factor)

    __rmul__ = __mul__

    @property
    def tag(self) -> str:
        """Short identity string recorded alongside orbits."""
        return repr(self)

    def to_dict(self) -> Dict:
        raise ParameterError(f"{self!r} has no JSON representation")


class SurisPotential(Potential):
    """
    Suris potential V(x) = ∫_0^x V'(s) ds.

    V' and V'' are closed forms; V and higher derivatives come from a
    Fourier table of V' built once at construction.
    """

    def __init__(self, params: SurisParams):
        self.params = params
        grid = uniform_grid(TABLE_NODES)
        self._vprime_table = FourierSeries(suris_vprime(params, grid))
        self._partial_tables = {
            name: FourierSeries(suris_vprime_partial(params, name, grid))
            for name in PARAMETER_NAMES
        }

    def value(self, x):
        return self._vprime_table.antiderivative(x)

    def derivative(self, x, order: int = 1):
        if order == 0:
            return self.value(x)
        if order == 1:
            return suris_vprime(self.params, x)
        if order == 2:
            return suris_vsecond(self.params, x)
        return self._vprime_table.derivative(x, order - 1)

    def partial(self, which: str, x):
        """∂V/∂which at x, integrated from 0."""
        if which not in self._partial_tables:
            raise ParameterError(f"unknown Suris parameter {which!r}")
        return self._partial_tables[which].antiderivative(x)

    def __repr__(self):
        p = self.params
        return f"SurisPotential(A={p.A!r}, B={p.B!r}, C={p.C!r}, D={p.D!r})"

    def to_dict(self) -> Dict:
        return {"suris": self.params.to_dict()}


@lru_cache(maxsize=256)
def suris_potential(params: SurisParams) -> SurisPotential:
    """Shared SurisPotential instance for ``params``."""
    return SurisPotential(params)


def suris_v(params: SurisParams, x):
    return suris_potential(params).value(x)


def suris_partial(params: SurisParams, which: str, x):
    return suris_potential(params).partial(which, x)


class TrigPerturbation(Potential):
    """W(x) = Σ a_n cos 2πnx + b_n sin 2πnx, without a constant term."""

    def __init__(self, cos_coeffs: Sequence[float] = (), sin_coeffs: Sequence[float] = ()):
        a = np.asarray(cos_coeffs, dtype=float).ravel()
        b = np.asarray(sin_coeffs, dtype=float).ravel()
        size = max(a.size, b.size)
        self.cos_coeffs = np.pad(a, (0, size - a.size))
        self.sin_coeffs = np.pad(b, (0, size - b.size))
        self.harmonics = np.arange(1, size + 1)
        if not (np.all(np.isfinite(self.cos_coeffs)) and np.all(np.isfinite(self.sin_coeffs))):
            raise ParameterError("trigonometric coefficients must be finite")

    def value(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        if not self.harmonics.size:
            return np.zeros(x.shape) if x.shape else 0.0
        phase = TWO_PI * np.multiply.outer(x, self.harmonics) + order * np.pi / 2.0
        scale = (TWO_PI * self.harmonics) ** order
        return np.cos(phase) @ (self.cos_coeffs * scale) + np.sin(phase) @ (self.sin_coeffs * scale)

    def __repr__(self):
        return f"TrigPerturbation(cos={self.cos_coeffs.tolist()}, sin={self.sin_coeffs.tolist()})"

    def to_dict(self) -> Dict:
        return {"trig": {"cos": self.cos_coeffs.tolist(), "sin": self.sin_coeffs.tolist()}}


class ConstantPotential(Potential):
    def __init__(self, constant: float = 0.0):
        self.constant = float(constant)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape, self.constant) if x.shape else self.constant

    def derivative(self, x, order: int = 1):
        if order == 0:
            return self.value(x)
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape) if x.shape else 0.0

    def __repr__(self):
        return f"ConstantPotential({self.constant!r})"

    def to_dict(self) -> Dict:
        return {"constant": self.constant}


class ScaledPotential(Potential):
    def __init__(self, base: Potential, factor: float):
        self.base = base
        self.factor = float(factor)
        self.grid_accurate_only = base.grid_accurate_only
        self.max_order = base.max_order

    def value(self, x):
        return self.factor * self.base.value(x)

    def derivative(self, x, order: int = 1):
        return self.factor * self.base.derivative(x, order)

    def __repr__(self):
        return f"{self.factor!r}*{self.base!r}"

    def to_dict(self) -> Dict:
        if isinstance(self.base, TrigPerturbation):
            scaled = TrigPerturbation(self.factor * self.base.cos_coeffs,
                                      self.factor * self.base.sin_coeffs)
            return scaled.to_dict()
        if isinstance(self.base, ConstantPotential):
            return {"constant": self.factor * self.base.constant}
        return super().to_dict()


class SumPotential(Potential):
    def __init__(self, left: Potential, right: Potential):
        self.left = left
        self.right = right
        self.grid_accurate_only = left.grid_accurate_only or right.grid_accurate_only
        orders = [o for o in (left.max_order, right.max_order) if o is not None]
        self.max_order = min(orders) if orders else None

    def value(self, x):
        return self.left.value(x) + self.right.value(x)

    def derivative(self, x, order: int = 1):
        return self.left.derivative(x, order) + self.right.derivative(x, order)

    def __repr__(self):
        return f"({self.left!r} + {self.right!r})"

    def to_dict(self) -> Dict:
        left, right = self.left.to_dict(), self.right.to_dict()
        if set(left) & set(right):
            raise ParameterError(f"{self!r} repeats a term kind and has no JSON representation")
        return {**left, **right}


class CallablePotential(Potential):
    """
    Arbitrary periodic callable.

    Derivatives come from a Fourier table of samples, so results are only as
    accurate as the sampling grid.
    """

    grid_accurate_only = True

    def __init__(self, func: Callable, nodes: int = NORM_NODES, max_order: int = 2):
        self.func = func
        self.max_order = max_order
        self._table = FourierSeries(np.asarray(func(uniform_grid(nodes)), dtype=float))

    def value(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def derivative(self, x, order: int = 1):
        if order > self.max_order:
            raise UnsupportedOrderError(
                f"derivative of order {order} requested, only {self.max_order} available"
            )
        if order == 0:
            return self.value(x)
        return self._table.derivative(x, order)

    def __repr__(self):
        return f"CallablePotential({getattr(self.func, '__name__', 'func')})"


class SurisTangent(Potential):
    """First-order Suris increment α∂_A V + β∂_B V + γ∂_C V + δ∂_D V."""

    def __init__(self, params: SurisParams, increment: Sequence[float]):
        self.params = params
        self.increment = np.asarray(increment, dtype=float)
        self._base = suris_potential(params)

    def value(self, x):
        return sum(w * self._base.partial(name, x)
                   for w, name in zip(self.increment, PARAMETER_NAMES))

    def derivative(self, x, order: int = 1):
        if order == 0:
            return self.value(x)
        if order == 1:
            return sum(w * suris_vprime_partial(self.params, name, x)
                       for w, name in zip(self.increment, PARAMETER_NAMES))
        return sum(w * self._base._partial_tables[name].derivative(x, order - 1)
                   for w, name in zip(self.increment, PARAMETER_NAMES))

    def __repr__(self):
        return f"SurisTangent({self.params!r}, {self.increment.tolist()})"


def tangent_combination(params: SurisParams, increment: Sequence[float]) -> SurisTangent:
    return SurisTangent(params, increment)


def suris_increment(params: SurisParams, increment: Sequence[float]) -> Potential:
    """Suris(params + increment) - Suris(params)."""
    return suris_potential(params.shifted(increment)) - suris_potential(params)


def cr_norm(W: Potential, r: int, nodes: int = NORM_NODES) -> float:
    """
    C^r norm of ``W``: max over orders 0..r of the supremum on a ``nodes`` grid.

    Raises:
        UnsupportedOrderError: If ``W`` cannot supply derivatives of order r
    """
    if r < 0:
        raise ParameterError(f"order must be non-negative, got {r}")
    if W.max_order is not None and r > W.max_order:
        raise UnsupportedOrderError(
            f"{W!r} provides derivatives up to order {W.max_order}, requested {r}"
        )
    return max(grid_sup(lambda x, m=m: W.derivative(x, m), nodes) for m in range(r + 1))


def grid_c1_norm(W: Potential, nodes: int = NORM_NODES) -> float:
    """Grid C^1 norm shared by all deviation measurements."""
    grid = uniform_grid(nodes)
    return max(float(np.abs(W.value(grid)).max()), float(np.abs(W.vprime(grid)).max()))


def potential_from_dict(document: Dict) -> Potential:
    """Build a potential from {"suris": {...}, "trig": {...}, "constant": c}."""
    if not isinstance(document, dict):
        raise ParameterError("potential document must be a JSON object")
    unknown = set(document) - {"suris", "trig", "constant"}
    if unknown:
        raise ParameterError(f"unknown potential keys: {sorted(unknown)}")

    terms = []
    if "suris" in document:
        entry = document["suris"]
        if not isinstance(entry, dict) or set(entry) - set(PARAMETER_NAMES):
            raise ParameterError("'suris' must map A, B, C, D to numbers")
        terms.append(suris_potential(SurisParams(**{k: float(v) for k, v in entry.items()})))
    if "trig" in document:
        entry = document["trig"]
        if not isinstance(entry, dict):
            raise ParameterError("'trig' must hold 'cos' and 'sin' lists")
        terms.append(TrigPerturbation(entry.get("cos", []), entry.get("sin", [])))
    if "constant" in document:
        terms.append(ConstantPotential(float(document["constant"])))

    if not terms:
        return ConstantPotential(0.0)
    potential = terms[0]
    for term in terms[1:]:
        potential = potential + term
    return potential


def load_potential(path) -> Potential:
    """Read a potential JSON document from ``path``."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ParameterError(f"{path}: invalid JSON ({e})") from e
    try:
        return potential_from_dict(document)
    except (ParameterError, TypeError, ValueError) as e:
        raise ParameterError(f"{path}: {e}") from e


def suris_params_of(potential: Potential) -> SurisParams:
    """Extract SurisParams from a pure Suris potential."""
    if isinstance(potential, SurisPotential):
        return potential.params
    raise ParameterError(f"expected a pure Suris potential, got {potential!r}")


def random_trig_perturbation(seed: int, harmonics: int = 8, amplitude: float = 1e-2) -> TrigPerturbation:
    """Smooth random perturbation with coefficients decaying like 1/n^2."""
    rng = np.random.default_rng(seed)
    decay = amplitude / np.arange(1, harmonics + 1) ** 2
    return TrigPerturbation(rng.standard_normal(harmonics) * decay,
                            rng.standard_normal(harmonics) * decay)
