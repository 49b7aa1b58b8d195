"""Action differences, the action function and the classical Hamiltonian action."""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, linalg

from torusaction.action.measures import Measure
from torusaction.action.quadrature import (
    QuadratureResult,
    density_integrals,
    displacement_integral,
    richardson,
)
from torusaction.dynamics.isotopy import IsotopySpec, sample_times, sample_trajectories
from torusaction.exceptions import (
    ActionError,
    CocycleResidualExceeded,
    DeckInconsistent,
    NotContractibleFixed,
)
from torusaction.geometry.cover import (
    PlanePoint,
    TorusPoint,
    deck_between,
    lift_near_array,
    project,
    torus_delta,
)
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

DEFAULT_GRID = 512
# rho(mu) counts as zero below this fraction of L on each coordinate
RHO_ZERO = 1e-6
SIGN_CONVENTION = "dH = -i_X omega"


@dataclass
class HamiltonianData:
    """Hamiltonian H(t, xy) on plane coordinates with its sign convention."""
    H: Callable[[float, np.ndarray], np.ndarray]
    convention: str = SIGN_CONVENTION
    area_form: str = "dx^dy"

    def to_dict(self) -> Dict[str, Any]:
        return {'convention': self.convention, 'area_form': self.area_form}


@dataclass
class RotationResult:
    """Mean rotation vector of a measure, per unit mass."""
    vector: np.ndarray
    error: float
    n: Optional[int]
    mass: float

    def is_zero(self, L: float) -> bool:
        """Whether every coordinate is below RHO_ZERO * L."""
        return bool(np.all(np.abs(self.vector) < RHO_ZERO * L))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'vector': [float(v) for v in self.vector],
            'error': self.error,
            'n': self.n,
            'mass': self.mass,
        }


@dataclass
class ActionReport:
    """Pairwise action differences of a set of fixed lifts and their primitive."""
    labels: List[str]
    lifts: List[PlanePoint]
    pairwise: np.ndarray
    errors: np.ndarray
    l_mu: Dict[str, float]
    residual: float
    quad_error: float
    rho: RotationResult
    L_mu: Optional[Dict[str, float]] = None
    spectrum: List[float] = field(default_factory=list)
    width: float = 0.0

    @property
    def descended(self) -> bool:
        return self.L_mu is not None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'labels': self.labels,
            'lifts': [[p.x, p.y] for p in self.lifts],
            'pairwise': self.pairwise.tolist(),
            'errors': self.errors.tolist(),
            'l_mu': self.l_mu,
            'L_mu': self.L_mu,
            'spectrum': self.spectrum,
            'width': self.width,
            'residual': self.residual,
            'quad_error': self.quad_error,
            'rho': self.rho.to_dict(),
        }


def hamiltonian_for(isotopy: IsotopySpec) -> HamiltonianData:
    """HamiltonianData of an isotopy built from an autonomous Hamiltonian.

    Raises:
        ActionError: If no generating Hamiltonian is known
    """
    if isotopy.hamiltonian is None:
        raise ActionError(f"No Hamiltonian known for {isotopy.name}")
    generator = isotopy.hamiltonian
    return HamiltonianData(H=lambda t, xy: generator(xy))


def rotation_vector_measure(isotopy: IsotopySpec, measure: Measure, n: int = DEFAULT_GRID,
                            tol: Optional[Tolerances] = None, threads: int = 1) -> RotationResult:
    """Mean rotation vector of an invariant measure.

    Atoms on periodic orbits contribute their exact rational rotation
    vectors. Otherwise, by invariance, the integral of the rotation
    vector equals the integral of the displacement F~(z) - z; grid
    measures report half the change between grids n/2 and n as error.
    """
    tol = tol or Tolerances()
    mass = measure.total_mass()
    if measure.is_atomic:
        rotations = _atom_rotations(isotopy, measure, tol)
        if rotations is None:
            rotations = isotopy.time_one(measure.points) - measure.points
        w = measure.weights
        vector = np.array([math.fsum(w * rotations[:, 0]), math.fsum(w * rotations[:, 1])]) / mass
        return RotationResult(vector, 0.0, None, mass)
    fine, coarse = richardson(lambda k: displacement_integral(isotopy, measure, k, tol, threads), n)
    error = 0.5 * float(np.max(np.abs(fine - coarse))) / mass
    return RotationResult(fine / mass, error, n, mass)


def _atom_rotations(isotopy: IsotopySpec, measure: Measure, tol: Tolerances) -> Optional[np.ndarray]:
    """Exact rotation vector of every atom, or None if an atom is not periodic.

    An invariant atomic measure is permuted by F, so periods are at most
    the number of atoms.
    """
    L = isotopy.L
    rotations = np.empty_like(measure.points)
    for k, start in enumerate(measure.points):
        w = start
        for period in range(1, len(measure.points) + 1):
            w = isotopy.time_one(w)
            if float(np.linalg.norm(torus_delta(w - start, L))) < tol.fixed:
                m, n = deck_between(start, lift_near_array(start, w, L), L)
                rotations[k] = [float(Fraction(m, period) * Fraction(L)),
                                float(Fraction(n, period) * Fraction(L))]
                break
        else:
            return None
    return rotations


def _canonical(a: PlanePoint, b: PlanePoint) -> Tuple[PlanePoint, PlanePoint, float]:
    if (b.x, b.y) < (a.x, a.y):
        return b, a, -1.0
    return a, b, 1.0


def action_differences(isotopy: IsotopySpec, measure: Measure, pairs: Sequence[Tuple[PlanePoint, PlanePoint]],
                       n: int = DEFAULT_GRID, tol: Optional[Tolerances] = None, threads: int = 1,
                       seed: int = 0) -> List[QuadratureResult]:
    """i_mu for several pairs, sharing trajectory samples.

    Each pair is evaluated in a fixed order of its endpoints and negated
    when swapped, so i_mu(b, a) = -i_mu(a, b) holds exactly.
    """
    tol = tol or Tolerances()
    measure.check_atoms_off_fixed(isotopy, tol)
    ordered = []
    signs = []
    for a, b in pairs:
        if (b - a).norm() <= tol.geom:
            raise ActionError("Action difference needs two distinct lifts")
        first, second, sign = _canonical(a, b)
        ordered.append((first, second))
        signs.append(sign)

    def evaluate(k):
        return density_integrals(isotopy, measure, ordered, k, tol, threads, seed)

    if measure.is_atomic:
        values = evaluate(0)
        return [QuadratureResult(sign * float(v), 0.0, 0) for sign, v in zip(signs, values)]
    fine, coarse = richardson(evaluate, n)
    return [QuadratureResult(sign * float(f), float(abs(f - c)), n, sign * float(c))
            for sign, f, c in zip(signs, fine, coarse)]


def action_difference(isotopy: IsotopySpec, measure: Measure, a: PlanePoint, b: PlanePoint,
                      n: int = DEFAULT_GRID, tol: Optional[Tolerances] = None, threads: int = 1,
                      seed: int = 0) -> QuadratureResult:
    """Action difference i_mu(a, b): the measure integral of the recurrent linking number.

    Args:
        isotopy: Isotopy preserving the measure
        measure: Invariant measure without atoms on contractible fixed points
        a: First fixed lift
        b: Second fixed lift
        n: Quadrature grid size for grid measures
        tol: Tolerances
        threads: Worker threads
        seed: Seed of the transversal jitter

    Returns:
        Value with error bar |I(n) - I(n/2)| (0 for atomic measures)
    """
    return action_differences(isotopy, measure, [(a, b)], n, tol, threads, seed)[0]


def cocycle_residual(pairwise: np.ndarray) -> float:
    """Largest |i(a,b) + i(b,c) + i(c,a)| over all triples."""
    size = len(pairwise)
    worst = 0.0
    for i in range(size):
        for j in range(i + 1, size):
            for k in range(j + 1, size):
                worst = max(worst, abs(pairwise[i, j] + pairwise[j, k] + pairwise[k, i]))
    return float(worst)


def _torus_key(p: PlanePoint, L: float) -> Tuple[float, float]:
    z = project(p, L)
    return round(z.x, 9), round(z.y, 9)


def solve_action_function(isotopy: IsotopySpec, measure: Measure, lifts: Sequence[PlanePoint],
                          labels: Optional[Sequence[str]] = None, n: int = DEFAULT_GRID,
                          tol: Optional[Tolerances] = None, threads: int = 1, seed: int = 0,
                          descend: bool = True) -> ActionReport:
    """Solve l(b) - l(a) = i_mu(a, b) over the lifts, anchoring the first lift at 0.

    When the measure has zero rotation vector the values descend to the
    torus points (L_mu), after checking that deck translates of the
    first lift have vanishing action difference.

    Raises:
        ActionError: If fewer than two lifts are supplied
        CocycleResidualExceeded: If the pairwise values are not a coboundary
        DeckInconsistent: If descending is impossible
    """
    tol = tol or Tolerances()
    lifts = list(lifts)
    if len(lifts) < 2:
        raise ActionError("The action function needs at least two lifts")
    labels = list(labels) if labels is not None else [f"p{i}" for i in range(len(lifts))]
    L = isotopy.L

    index_pairs = [(i, j) for i in range(len(lifts)) for j in range(i + 1, len(lifts))]
    results = action_differences(isotopy, measure, [(lifts[i], lifts[j]) for i, j in index_pairs],
                                 n, tol, threads, seed)
    pairwise = np.zeros((len(lifts), len(lifts)))
    errors = np.zeros_like(pairwise)
    for (i, j), result in zip(index_pairs, results):
        pairwise[i, j], pairwise[j, i] = result.value, -result.value
        errors[i, j] = errors[j, i] = result.error
    quad_error = float(errors.max())

    residual = cocycle_residual(pairwise)
    if residual > max(10 * quad_error, 1e-9):
        raise CocycleResidualExceeded(
            f"Cocycle residual {residual:.3e} above 10x quadrature error {quad_error:.3e}"
        )

    design = np.zeros((len(index_pairs), len(lifts)))
    rhs = np.empty(len(index_pairs))
    for row, (i, j) in enumerate(index_pairs):
        design[row, i], design[row, j] = -1.0, 1.0
        rhs[row] = pairwise[i, j]
    solution, _, _, _ = linalg.lstsq(design[:, 1:], rhs)
    values = np.concatenate([[0.0], solution])
    l_mu = {label: float(v) for label, v in zip(labels, values)}

    rho = rotation_vector_measure(isotopy, measure, n, tol, threads)
    report = ActionReport(labels, lifts, pairwise, errors, l_mu, residual, quad_error, rho)
    bound = max(10 * quad_error, tol.quad)

    if descend and rho.is_zero(L):
        base = lifts[0]
        translates = [(base, PlanePoint(base.x + L, base.y)), (base, PlanePoint(base.x, base.y + L))]
        for check in action_differences(isotopy, measure, translates, n, tol, threads, seed):
            if abs(check.value) > max(10 * check.error, tol.quad):
                raise DeckInconsistent(f"Action difference to a deck translate is {check.value:.3e}")
        report.L_mu = {}
        seen: Dict[Tuple[float, float], float] = {}
        for label, p, v in zip(labels, lifts, values):
            key = _torus_key(p, L)
            if key in seen and abs(seen[key] - v) > bound:
                raise DeckInconsistent(f"Lifts of the same point disagree at {label}")
            seen.setdefault(key, float(v))
            report.L_mu[label] = seen[key]
        report.spectrum = sorted(set(seen.values()))
    else:
        report.spectrum = sorted(float(v) for v in values)

    report.width = max(report.spectrum) - min(report.spectrum)
    logger.info("Action function on %d lifts: width %.6f, residual %.2e", len(lifts), report.width, residual)
    return report


def _shoelace(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * math.fsum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def classical_action(hamiltonian: HamiltonianData, isotopy: IsotopySpec, x: Union[TorusPoint, PlanePoint],
                     tol: Optional[Tolerances] = None) -> float:
    """A_H(x): area bounded by the trajectory loop of x minus the time integral of H along it.

    Raises:
        NotContractibleFixed: If x is not a contractible fixed point
    """
    tol = tol or Tolerances()
    p = np.array([x.x, x.y], dtype=float)
    if float(np.linalg.norm(isotopy.time_one(p) - p)) >= tol.fixed:
        raise NotContractibleFixed(f"({x.x:.6g}, {x.y:.6g}) is not a contractible fixed point")

    times = sample_times(isotopy.segments, 16 * tol.trajectory_steps)
    loop = sample_trajectories(isotopy, p, times)
    area = _shoelace(loop[:-1])

    breaks = list(np.linspace(0.0, 1.0, isotopy.segments + 1)[1:-1]) or None
    integral, _ = integrate.quad(lambda t: float(hamiltonian.H(t, isotopy.lifted(t, p))), 0.0, 1.0,
                                 points=breaks, limit=200, epsabs=1e-12, epsrel=1e-10)
    return area - integral
