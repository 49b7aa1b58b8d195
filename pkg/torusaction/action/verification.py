"""Checks of the iteration formula, nonconstancy, Kac's lemma, conjugation
invariance and agreement with the classical action.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from torusaction.action.action import (
    DEFAULT_GRID,
    ActionReport,
    HamiltonianData,
    action_difference,
    classical_action,
    rotation_vector_measure,
    solve_action_function,
)
from torusaction.action.measures import Measure
from torusaction.dynamics.isotopy import IsotopySpec, conjugate, power
from torusaction.dynamics.linking import find_fixed_points
from torusaction.dynamics.orbits import ReturnDisk, first_return
from torusaction.exceptions import MeasureError
from torusaction.geometry.cover import PlanePoint, TorusPoint
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

NONCONSTANT = 'nonconstant'
CONSTANT = 'constant'
VIOLATED = 'hypothesis violated'


@dataclass
class IterationCheck:
    """Comparison of i_mu(I^q) with q * i_mu(I)."""
    q: int
    value: float
    error: float
    ratio: Optional[float]
    deviation: float
    allowed: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.allowed

    def to_dict(self) -> Dict[str, Any]:
        return {
            'q': self.q,
            'value': self.value,
            'error': self.error,
            'ratio': self.ratio,
            'deviation': self.deviation,
            'allowed': self.allowed,
            'passed': self.passed,
        }


@dataclass
class IterationReport:
    base: float
    base_error: float
    checks: List[IterationCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'base': self.base,
            'base_error': self.base_error,
            'checks': [c.to_dict() for c in self.checks],
            'passed': self.passed,
        }


@dataclass
class SchwarzReport:
    """Nonconstancy verdict and growth of the width under iteration."""
    verdict: str
    reasons: List[str] = field(default_factory=list)
    width: Optional[float] = None
    error: Optional[float] = None
    widths: Dict[int, float] = field(default_factory=dict)
    slope: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.verdict != VIOLATED

    def to_dict(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'reasons': self.reasons,
            'width': self.width,
            'error': self.error,
            'widths': {str(k): v for k, v in self.widths.items()},
            'slope': self.slope,
        }


@dataclass
class KacReport:
    """Both sides of Kac's lemma for an atomic measure."""
    return_integral: float
    orbit_mass: float
    atoms_in_disk: int

    @property
    def passed(self) -> bool:
        return abs(self.return_integral - self.orbit_mass) <= 1e-12

    def to_dict(self) -> Dict[str, Any]:
        return {
            'return_integral': self.return_integral,
            'orbit_mass': self.orbit_mass,
            'atoms_in_disk': self.atoms_in_disk,
            'passed': self.passed,
        }


@dataclass
class ConjugationReport:
    spectrum: List[float]
    conjugate_spectrum: List[float]
    deviation: float
    allowed: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.allowed

    def to_dict(self) -> Dict[str, Any]:
        return {
            'spectrum': self.spectrum,
            'conjugate_spectrum': self.conjugate_spectrum,
            'deviation': self.deviation,
            'allowed': self.allowed,
            'passed': self.passed,
        }


@dataclass
class ClassicalReport:
    """Classical actions at the lifts against the solved action function."""
    actions: Dict[str, float]
    action_gap: float
    width: float
    slope: Optional[float]
    intercept: Optional[float]
    allowed: float

    @property
    def passed(self) -> bool:
        return abs(self.action_gap - self.width) <= self.allowed

    def to_dict(self) -> Dict[str, Any]:
        return {
            'actions': self.actions,
            'action_gap': self.action_gap,
            'width': self.width,
            'fitted_constant': self.slope,
            'intercept': self.intercept,
            'allowed': self.allowed,
            'passed': self.passed,
        }


def verify_iteration(isotopy: IsotopySpec, measure: Measure, a: PlanePoint, b: PlanePoint,
                     qs: Sequence[int], n: int = DEFAULT_GRID, tol: Optional[Tolerances] = None,
                     threads: int = 1, seed: int = 0) -> IterationReport:
    """Compare i_mu(I^q; a, b) with q * i_mu(I; a, b) for each q.

    A check passes when the relative deviation of the ratio from q is
    below 1e-3 plus ten times the relative quadrature errors. A vanishing
    base value is compared in absolute terms instead.
    """
    tol = tol or Tolerances()
    base = action_difference(isotopy, measure, a, b, n, tol, threads, seed)
    report = IterationReport(base.value, base.error)
    small = abs(base.value) <= tol.quad
    for q in qs:
        result = base if q == 1 else action_difference(power(isotopy, q), measure, a, b, n, tol, threads, seed)
        if small:
            deviation = abs(result.value - q * base.value)
            allowed = tol.quad + 10 * (result.error + q * base.error)
            ratio = None
        else:
            ratio = result.value / base.value
            deviation = abs(ratio - q) / q
            relative = result.error / max(abs(result.value), tol.quad) + base.error / abs(base.value)
            allowed = 1e-3 + 10 * relative
        report.checks.append(IterationCheck(q, result.value, result.error, ratio, deviation, allowed))
        logger.info("Iteration q=%d: value %.6f, ratio %s", q, result.value, ratio)
    return report


def verify_schwarz(isotopy: IsotopySpec, measure: Measure, lifts: Sequence[PlanePoint],
                   labels: Optional[Sequence[str]] = None, n: int = DEFAULT_GRID,
                   powers: Sequence[int] = (), tol: Optional[Tolerances] = None, threads: int = 1,
                   seed: int = 0, fixed_grid: int = 64) -> SchwarzReport:
    """Decide whether the action width is positive, after checking the hypotheses.

    The hypotheses are contractible fixed points, a full-support measure
    and a vanishing rotation vector. When powers are given, the width of
    each power is computed and a line is fitted through them.
    """
    tol = tol or Tolerances()
    reasons = []
    contractible = [r for r in find_fixed_points(isotopy, fixed_grid, tol) if r.contractible]
    if not contractible:
        reasons.append("no contractible fixed points")
    if not measure.full_support:
        reasons.append("measure without full support")
    rho = rotation_vector_measure(isotopy, measure, n, tol, threads)
    if not rho.is_zero(isotopy.L):
        reasons.append(f"rotation vector {rho.vector.tolist()} is not zero")
    if reasons or len(lifts) < 2:
        if len(lifts) < 2 and not reasons:
            reasons.append("fewer than two lifts")
        logger.warning("Nonconstancy hypotheses fail: %s", "; ".join(reasons))
        return SchwarzReport(VIOLATED, reasons)

    report = solve_action_function(isotopy, measure, lifts, labels, n, tol, threads, seed)
    margin = 10 * report.quad_error + tol.quad
    verdict = NONCONSTANT if report.width > margin else CONSTANT
    result = SchwarzReport(verdict, width=report.width, error=report.quad_error)

    if powers:
        for k in powers:
            iterate = report if k == 1 else solve_action_function(
                power(isotopy, k), measure, lifts, labels, n, tol, threads, seed)
            result.widths[int(k)] = iterate.width
        ks = np.array(sorted(result.widths), dtype=float)
        result.slope = float(np.polyfit(ks, [result.widths[int(k)] for k in ks], 1)[0])
    logger.info("Nonconstancy verdict: %s (width %.6f)", verdict, report.width)
    return result


def _orbit_meets(isotopy: IsotopySpec, disk: ReturnDisk, start: np.ndarray, period_cap: int) -> bool:
    w = start
    for _ in range(period_cap):
        if disk.contains(w):
            return True
        w = isotopy.time_one(w)
    return False


def kac_check(isotopy: IsotopySpec, measure: Measure, disk: ReturnDisk,
              tol: Optional[Tolerances] = None) -> KacReport:
    """Integral of the first return time over the disk against the mass of its saturation.

    Raises:
        MeasureError: If the measure is not atomic and invariant
    """
    tol = tol or Tolerances()
    if not measure.is_atomic:
        raise MeasureError("Kac check needs an atomic measure")
    measure.check_invariance(isotopy, tol)
    # F permutes the atoms, so every orbit closes within len(points) iterates
    period_cap = len(measure.points)
    terms = []
    in_disk = 0
    for p, w in zip(measure.points, measure.weights):
        if disk.contains(p):
            tau, _ = first_return(isotopy, disk, TorusPoint(p[0], p[1], isotopy.L))
            terms.append(tau * w)
            in_disk += 1
    saturated = [w for p, w in zip(measure.points, measure.weights)
                 if _orbit_meets(isotopy, disk, p, period_cap)]
    report = KacReport(math.fsum(terms), math.fsum(saturated), in_disk)
    logger.info("Kac check: %.15g vs %.15g", report.return_integral, report.orbit_mass)
    return report


def verify_conjugation(isotopy: IsotopySpec, by: IsotopySpec, measure: Measure,
                       lifts: Sequence[PlanePoint], labels: Optional[Sequence[str]] = None,
                       n: int = DEFAULT_GRID, tol: Optional[Tolerances] = None, threads: int = 1,
                       seed: int = 0) -> ConjugationReport:
    """Compare the spectrum of I with that of h I h^-1 on the image lifts.

    The conjugacy must preserve the measure.
    """
    tol = tol or Tolerances()
    measure.check_invariance(by, tol)
    original = solve_action_function(isotopy, measure, lifts, labels, n, tol, threads, seed)
    moved = [PlanePoint.from_array(by.time_one(p.as_array())) for p in lifts]
    conjugated = solve_action_function(conjugate(isotopy, by), measure, moved, labels, n, tol, threads, seed)
    if len(original.spectrum) != len(conjugated.spectrum):
        deviation = math.inf
    else:
        deviation = float(np.max(np.abs(np.array(original.spectrum) - np.array(conjugated.spectrum))))
    allowed = 10 * (original.quad_error + conjugated.quad_error) + tol.quad
    return ConjugationReport(original.spectrum, conjugated.spectrum, deviation, allowed)


def classical_cross_check(report: ActionReport, hamiltonian: HamiltonianData, isotopy: IsotopySpec,
                          tol: Optional[Tolerances] = None) -> ClassicalReport:
    """Classical actions at the lifts of a solved report, with the fitted
    constant c in l_mu = c * A_H + d.
    """
    tol = tol or Tolerances()
    actions = {label: classical_action(hamiltonian, isotopy, p, tol)
               for label, p in zip(report.labels, report.lifts)}
    values = list(actions.values())
    gap = max(values) - min(values)
    slope = intercept = None
    if gap > tol.quad:
        slope, intercept = (float(v) for v in np.polyfit(values, [report.l_mu[k] for k in actions], 1))
    allowed = 10 * report.quad_error + tol.quad
    return ClassicalReport(actions, gap, report.width, slope, intercept, allowed)
