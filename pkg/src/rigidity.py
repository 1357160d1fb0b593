"""
Rigidity Experiments Module

Drivers measuring the quantitative estimates behind local rigidity of the
Suris family: deviation laws of periodic orbits, decay of coefficients in
the deformed basis, orthogonality of high and low modes, the projection
step back onto the Suris family and the periodic-rigidity obstruction.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .basis import InnerProductContext, split_index
from .config import parallel_map
from .errors import NoConvergenceError, ParameterError, PeriodMismatchError
from .orbits import action_deviation, beta, orbit_deviation, rationals_in_window, rotation_symmetry_residual
from .potentials import (
    ConstantPotential,
    Potential,
    SurisParams,
    cr_norm,
    suris_increment,
    suris_potential,
)
from .spectral import uniform_grid

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-6
COEFFICIENT_SPREAD = 4.0
TAIL_REFINEMENT_TOL = 0.1
ACTION_EXPONENT = (1.8, 2.2)
ORBIT_EXPONENT = (0.8, 1.2)
PERIODICITY_TOL = 1e-10
OBSTRUCTION_NODES = 4096
MAX_HALVINGS = 8


class PowerLawFit(NamedTuple):
    """y ≈ constant * x ** exponent, with the R^2 of the log-log fit."""

    exponent: float
    constant: float
    r_squared: float


def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> PowerLawFit:
    """Least-squares line through (log x, log y)."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    if lx.size < 2:
        raise ParameterError("power-law fit needs at least two points")
    slope, intercept = np.polyfit(lx, ly, 1)
    predicted = slope * lx + intercept
    spread = float(np.sum((ly - ly.mean()) ** 2))
    r_squared = 1.0 - float(np.sum((ly - predicted) ** 2)) / spread if spread > 0.0 else 1.0
    return PowerLawFit(float(slope), float(np.exp(intercept)), r_squared)


def _plain(value):
    if isinstance(value, PowerLawFit):
        return _plain(value._asdict())
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, Fraction):
        return str(value)
    return value


@dataclass
class EstimateReport:
    """
    Outcome of one experiment.

    Attributes:
        experiment: Experiment id
        sweep: Values of the swept variables
        measured: Measured quantities
        fitted: Fitted constants and exponents
        tolerance: Declared thresholds
        parameters: Grid sizes, iteration counts and inputs
        passed: Whether every threshold held
    """

    experiment: str
    sweep: Dict[str, Any] = field(default_factory=dict)
    measured: Dict[str, Any] = field(default_factory=dict)
    fitted: Dict[str, Any] = field(default_factory=dict)
    tolerance: Dict[str, Any] = field(default_factory=dict)
    parameters: Dict[str, Any] = field(default_factory=dict)
    passed: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return _plain({
            "experiment": self.experiment,
            "sweep": self.sweep,
            "measured": self.measured,
            "fitted": self.fitted,
            "tolerance": self.tolerance,
            "parameters": self.parameters,
            "passed": self.passed,
        })


@dataclass
class ProjectionResult:
    params_out: SurisParams
    residual_norms: List[float]
    increments: List[List[float]] = field(default_factory=list)
    offset: float = 0.0
    split_index: int = 8
    rejected_steps: int = 0

    def to_report(self, params: SurisParams) -> EstimateReport:
        norms = self.residual_norms
        first_ratio = norms[1] / norms[0] if len(norms) > 1 and norms[0] > 0 else 0.0
        return EstimateReport(
            experiment="project",
            sweep={"step": list(range(len(norms)))},
            measured={"residual_norms": norms, "increments": self.increments,
                      "offset": self.offset, "first_step_ratio": first_ratio},
            fitted={"params_out": self.params_out.to_dict(), "split_index": self.split_index},
            parameters={"params_in": params.to_dict(), "rejected_steps": self.rejected_steps},
            passed=all(b <= a for a, b in zip(norms, norms[1:])),
        )


def _signed_modes(qs: Sequence[int]) -> List[int]:
    return [s * q for q in qs for s in (1, -1)]


def verify_action_coefficient_bound(params: SurisParams, W: Potential, qset: Sequence[int],
                                    ctx: Optional[InnerProductContext] = None) -> EstimateReport:
    """
    |<W, f_q>| against q^4 ||W||_1^2 for a Suris increment W.

    The reported ratio is max_q |<W, f_q>| / (q^4 ||W||_1^2).
    """
    ctx = ctx or InnerProductContext(params)
    norm = cr_norm(W, 1)
    qs = list(qset)
    coefficients = ctx.coefficients(W, qs)
    magnitudes = [abs(c) for c in coefficients]
    projection = ctx.project_low_modes(W)
    ratio = max(m / (q ** 4 * norm ** 2) for m, q in zip(magnitudes, qs)) if norm > 0.0 else 0.0
    return EstimateReport(
        experiment="coefficient-bound",
        sweep={"q": qs},
        measured={"coefficients": magnitudes, "c1_norm": norm,
                  "projection_defect": projection.orthogonality_defect},
        fitted={"ratio": ratio},
        tolerance={"projection_defect": 1e-9},
        parameters={"params": params.to_dict(), "nodes": ctx.nodes},
        passed=bool(np.isfinite(ratio)) and projection.orthogonality_defect < 1e-9,
    )


def verify_coefficient_halving(params: SurisParams, increment: Sequence[float],
                               qset: Sequence[int] = tuple(range(3, 17)), halvings: int = 4,
                               ctx: Optional[InnerProductContext] = None) -> EstimateReport:
    """Coefficient-bound ratios for W = Suris(p + Δ/2^j) - Suris(p), j = 0..halvings."""
    ctx = ctx or InnerProductContext(params)
    base = np.asarray(increment, dtype=float)
    sizes, ratios = [], []
    for j in range(halvings + 1):
        report = verify_action_coefficient_bound(params, suris_increment(params, base / 2 ** j), qset, ctx)
        sizes.append(report.measured["c1_norm"])
        ratios.append(report.fitted["ratio"])
    spread = max(ratios) / min(ratios) if min(ratios) > 0.0 else float("inf")
    return EstimateReport(
        experiment="coefficient-bound",
        sweep={"halving": list(range(halvings + 1)), "c1_norm": sizes},
        measured={"ratios": ratios},
        fitted={"spread": spread},
        tolerance={"spread": COEFFICIENT_SPREAD},
        parameters={"params": params.to_dict(), "increment": base.tolist(), "q": list(qset),
                    "nodes": ctx.nodes},
        passed=spread < COEFFICIENT_SPREAD,
    )


def _tail_constant(params: SurisParams, W: Potential, qmax: int, nodes: int) -> float:
    ctx = InnerProductContext(params, nodes)
    norm = cr_norm(W, 1)
    if norm == 0.0:
        return 0.0
    qs = list(range(9, qmax + 1))
    return max(q * abs(c) / norm for q, c in zip(qs, ctx.coefficients(W, qs)))


def verify_tail_bound(params: SurisParams, W: Potential, qmax: int = 64,
                      nodes: int = 2048) -> EstimateReport:
    """max_{9<=q<=qmax} q |<W, f_q>| / ||W||_1 on the grid and on the doubled grid."""
    coarse = _tail_constant(params, W, qmax, nodes)
    fine = _tail_constant(params, W, qmax, 2 * nodes)
    drift = abs(fine - coarse) / max(coarse, 1e-300)
    return EstimateReport(
        experiment="tail",
        sweep={"q": [9, qmax]},
        measured={"coarse": coarse, "fine": fine, "refinement_drift": drift},
        fitted={"constant": fine},
        tolerance={"refinement_drift": TAIL_REFINEMENT_TOL},
        parameters={"params": params.to_dict(), "nodes": nodes, "perturbation": W.tag},
        passed=bool(np.isfinite(fine)) and (coarse < 1e-12 or drift < TAIL_REFINEMENT_TOL),
    )


def _orthogonality_max(params: SurisParams, qmax: int, nodes: int, threads: int) -> float:
    ctx = InnerProductContext(params, nodes, threads)
    low = [ctx.basis_vector(j).values for j in (1, -1, 2, -2)]

    def worst(q):
        f = ctx.basis_vector(q).values
        return max(abs(ctx.inner_product(f, g)) for g in low)

    return max(parallel_map(worst, _signed_modes(range(3, qmax + 1)), threads))


def verify_orthogonality(params: SurisParams, qmax: int = 32, nodes: int = 2048,
                         threads: int = 1) -> EstimateReport:
    """max |<f_q, f_j>| over 3 <= |q| <= qmax, j in {±1, ±2}, on the grid and the doubled grid."""
    coarse = _orthogonality_max(params, qmax, nodes, threads)
    fine = _orthogonality_max(params, qmax, 2 * nodes, threads)
    return EstimateReport(
        experiment="orthogonality",
        sweep={"q": [3, qmax]},
        measured={"coarse": coarse, "fine": fine},
        fitted={"max_inner_product": fine},
        tolerance={"max_inner_product": ORTHOGONALITY_TOL},
        parameters={"params": params.to_dict(), "nodes": nodes},
        passed=fine < ORTHOGONALITY_TOL and fine <= max(coarse, 1e-12),
    )


def verify_deviation_scaling(params: SurisParams, increment: Sequence[float], p: int, q: int,
                             x0: float = 0.0, halvings: int = 4) -> EstimateReport:
    """Fitted exponents of orbit and action deviation against ||W||_1 under halving."""
    base = np.asarray(increment, dtype=float)
    norms, orbit_devs, action_devs = [], [], []
    for j in range(halvings + 1):
        W = suris_increment(params, base / 2 ** j)
        norms.append(cr_norm(W, 1))
        orbit_devs.append(orbit_deviation(params, W, p, q, x0))
        action_devs.append(action_deviation(params, W, p, q, x0))
    orbit_fit = fit_power_law(norms, orbit_devs)
    action_fit = fit_power_law(norms, action_devs)
    return EstimateReport(
        experiment="deviation",
        sweep={"c1_norm": norms},
        measured={"orbit_deviation": orbit_devs, "action_deviation": action_devs},
        fitted={"orbit": orbit_fit, "action": action_fit},
        tolerance={"orbit_exponent": list(ORBIT_EXPONENT), "action_exponent": list(ACTION_EXPONENT)},
        parameters={"params": params.to_dict(), "increment": base.tolist(), "p": p, "q": q, "x0": x0},
        passed=(ORBIT_EXPONENT[0] <= orbit_fit.exponent <= ORBIT_EXPONENT[1]
                and ACTION_EXPONENT[0] <= action_fit.exponent <= ACTION_EXPONENT[1]),
    )


def project_to_suris(params: SurisParams, W: Potential, iterations: int = 1,
                     nodes: int = 2048) -> ProjectionResult:
    """
    Repeatedly move the Suris parameters along the low-mode projection of the residual.

    Each step projects W~ = V_S + W - V~_S - offset on {f_0, f_±1, f_±2},
    shifts (A, B, C, D) by the read-off increment and the constant offset by
    w_0; a step that does not decrease ||W~||_1 is halved up to 8 times.
    """
    target = suris_potential(params) + W
    current, offset = params, 0.0

    def residual_of(candidate: SurisParams, shift: float) -> Potential:
        return target - suris_potential(candidate) - ConstantPotential(shift)

    norms = [cr_norm(residual_of(current, offset), 1)]
    result = ProjectionResult(current, norms, split_index=split_index(norms[0]))
    for step_index in range(iterations):
        if norms[-1] == 0.0:
            break
        ctx = InnerProductContext(current, nodes)
        projection = ctx.project_low_modes(residual_of(current, offset))
        increment, shift = projection.increment, projection.w0
        for _ in range(MAX_HALVINGS + 1):
            try:
                candidate = current.shifted(increment)
            except ParameterError:
                candidate = None
            if candidate is not None:
                norm = cr_norm(residual_of(candidate, offset + shift), 1)
                if norm <= norms[-1]:
                    break
            increment, shift = increment / 2.0, shift / 2.0
            result.rejected_steps += 1
            logger.warning("projection step %d rejected, halving the increment", step_index)
        else:
            logger.warning("projection stalled at step %d", step_index)
            break
        current, offset = candidate, offset + shift
        norms.append(norm)
        result.increments.append(increment.tolist())
        logger.debug("projection step %d: ||W~||_1 = %.3e", step_index, norm)
    result.params_out, result.offset = current, offset
    return result


def periodic_rigidity_obstruction(V: Potential, r: int, k: int, nodes: int = OBSTRUCTION_NODES) -> float:
    """
    sup_x |FK residual of the rigid rotation by r/k| = sup |V'|.

    Raises:
        ParameterError: Unless gcd(r, k) = 1 and k >= 2
        PeriodMismatchError: If V is not (r/k)-periodic
    """
    if k < 2 or math.gcd(r, k) != 1:
        raise ParameterError(f"need gcd(r, k) = 1 and k >= 2, got r={r}, k={k}")
    grid = uniform_grid(nodes)
    shift = r / k
    mismatch = max(float(np.abs(V.value(grid + shift) - V.value(grid)).max()),
                   float(np.abs(V.vprime(grid + shift) - V.vprime(grid)).max()))
    if mismatch > PERIODICITY_TOL:
        raise PeriodMismatchError(f"potential is not {r}/{k}-periodic (mismatch {mismatch:.3g})")
    return float(np.abs(rotation_symmetry_residual(V, grid, r, k)).max())


def beta_consistency(params: SurisParams, W: Potential, qmax: int = 12,
                     threads: int = 1) -> EstimateReport:
    """beta(V_S + W) - beta(V_S) on reduced rationals in [1/6, 1/3] with q <= qmax."""
    V_S = suris_potential(params)
    V = V_S + W

    def entry(pq):
        p, q = pq
        try:
            return beta(V, p, q) - beta(V_S, p, q), None
        except NoConvergenceError as e:
            return None, str(e)

    rationals = rationals_in_window(qmax)
    outcomes = parallel_map(entry, rationals, threads)
    differences = [d for d, _ in outcomes]
    errors = {f"{p}/{q}": e for (p, q), (_, e) in zip(rationals, outcomes) if e}
    return EstimateReport(
        experiment="beta-consistency",
        sweep={"rational": [f"{p}/{q}" for p, q in rationals]},
        measured={"beta_difference": differences, "errors": errors},
        fitted={"max_abs_difference": max((abs(d) for d in differences if d is not None), default=0.0)},
        parameters={"params": params.to_dict(), "qmax": qmax, "perturbation": W.tag},
        passed=not errors,
    )
