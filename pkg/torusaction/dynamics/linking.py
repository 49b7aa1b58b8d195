"""Linking numbers of lifted fixed points.

For two fixed lifts z~, z~' the linking number is the degree of the
difference F~_t(z~') - F~_t(z~) over one unit of time, read off as the
winding number of that closed curve around the origin.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from torusaction.dynamics.isotopy import IsotopySpec, sample_times, sample_trajectories
from torusaction.exceptions import LinkingError, NotContractibleFixed, NotFixed, ShellCapExceeded
from torusaction.geometry.cover import (
    PlanePoint,
    TorusPoint,
    lift_near,
    project,
    shell,
    torus_delta,
    wrap,
)
from torusaction.geometry.paths import PlanePath, counter_rng, winding_number
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

ORIGIN = PlanePoint(0.0, 0.0)


@dataclass(frozen=True)
class FixedPointRecord:
    """Fixed point of the time-one map with its lift."""
    point: TorusPoint
    lift: PlanePoint
    contractible: bool
    residual: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'point': [self.point.x, self.point.y],
            'lift': [self.lift.x, self.lift.y],
            'contractible': self.contractible,
            'residual': self.residual,
        }


@dataclass
class FixedPointComponent:
    """Connected component of a sampled fixed set."""
    index: int
    members: List[int]
    representative: FixedPointRecord
    contractible: bool

    @property
    def size(self) -> int:
        return len(self.members)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'index': self.index,
            'size': self.size,
            'representative': self.representative.to_dict(),
            'contractible': self.contractible,
        }


@dataclass
class LinkingMatrix:
    """Pairwise linking numbers of a finite set of fixed lifts.

    The diagonal is excluded from the definition and stored as 0.
    """
    labels: List[str]
    lifts: List[PlanePoint]
    values: np.ndarray

    @property
    def max_abs(self) -> int:
        if len(self.labels) < 2:
            return 0
        return int(np.max(np.abs(self.values)))

    def value(self, label_a: str, label_b: str) -> int:
        """Linking number of two labelled lifts."""
        i, j = self.labels.index(label_a), self.labels.index(label_b)
        if i == j:
            raise LinkingError("Linking number of a lift with itself is undefined")
        return int(self.values[i, j])

    def rows(self) -> Iterator[Tuple[str, str, int]]:
        """Off-diagonal entries, row-major."""
        for i, a in enumerate(self.labels):
            for j, b in enumerate(self.labels):
                if i != j:
                    yield a, b, int(self.values[i, j])

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'labels': self.labels,
            'lifts': [[p.x, p.y] for p in self.lifts],
            'values': self.values.astype(int).tolist(),
            'max_abs': self.max_abs,
        }


@dataclass
class WBReport:
    """Linking bounds over a finite sample of fixed lifts."""
    labels: List[str]
    row_bounds: Dict[str, int]
    global_bound: int
    rows_at_max: List[str]
    evidence: str = "sampled"

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'row_bounds': self.row_bounds,
            'global_bound': self.global_bound,
            'rows_at_max': self.rows_at_max,
            'evidence': self.evidence,
        }


@dataclass
class PropertyReport:
    """Outcome of the local constancy, deck invariance, same-fiber and vanishing checks."""
    locally_constant: bool = True
    deck_invariant: bool = True
    same_fiber_zero: bool = True
    vanishing: bool = True
    vanishing_radius: float = 0.0
    checks: Dict[str, int] = field(default_factory=lambda: {'locally_constant': 0, 'deck_invariant': 0, 'same_fiber_zero': 0, 'vanishing': 0})
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.locally_constant and self.deck_invariant and self.same_fiber_zero and self.vanishing

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'locally_constant': self.locally_constant,
            'deck_invariant': self.deck_invariant,
            'same_fiber_zero': self.same_fiber_zero,
            'vanishing': self.vanishing,
            'vanishing_radius': self.vanishing_radius,
            'checks': self.checks,
            'failures': self.failures,
            'passed': self.passed,
            'evidence': 'sampled',
        }


def _grid(L: float, n: int) -> np.ndarray:
    axis = np.arange(n) * (L / n)
    return np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)


def _wrapped_displacement(isotopy: IsotopySpec, xy: np.ndarray) -> np.ndarray:
    return torus_delta(isotopy.time_one(xy) - xy, isotopy.L)


def _newton_fixed(isotopy: IsotopySpec, seeds: np.ndarray, max_step: float,
                  tol: Tolerances, max_iter: int = 80) -> Tuple[np.ndarray, np.ndarray]:
    """Damped Newton on the wrapped displacement field, vectorized over seeds."""
    w = np.array(seeds, dtype=float)
    if len(w) == 0:
        return w, np.zeros(0)
    h = 1e-7
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    for _ in range(max_iter):
        g = _wrapped_displacement(isotopy, w)
        err = np.linalg.norm(g, axis=1)
        active = err >= tol.fixed
        if not np.any(active):
            break
        jac = np.empty((len(w), 2, 2))
        jac[:, :, 0] = (_wrapped_displacement(isotopy, w + ex) - _wrapped_displacement(isotopy, w - ex)) / (2 * h)
        jac[:, :, 1] = (_wrapped_displacement(isotopy, w + ey) - _wrapped_displacement(isotopy, w - ey)) / (2 * h)
        step = np.einsum('nij,nj->ni', np.linalg.pinv(jac), g)
        length = np.linalg.norm(step, axis=1)
        with np.errstate(divide='ignore', invalid='ignore'):
            scale = np.where(length > max_step, max_step / length, 1.0)
        step *= scale[:, None]
        candidate = w - step
        worse = np.linalg.norm(_wrapped_displacement(isotopy, candidate), axis=1) > err
        candidate[worse] = w[worse] - 0.5 * step[worse]
        w = np.where(active[:, None], candidate, w)
    return w, np.linalg.norm(_wrapped_displacement(isotopy, w), axis=1)


def find_fixed_points(isotopy: IsotopySpec, grid_n: int = 64,
                      tol: Optional[Tolerances] = None) -> List[FixedPointRecord]:
    """Locate fixed points of the time-one map from an n x n grid of seeds.

    Seeds that are already fixed are kept as they are; seeds with a small
    displacement are refined by damped Newton and merged with nearby
    points already found.

    Args:
        isotopy: Isotopy whose time-one map is searched
        grid_n: Seed grid size
        tol: Tolerances

    Returns:
        Records with residual below the fixed tolerance, possibly empty
    """
    if grid_n < 8:
        raise ValueError(f"Fixed point search needs grid_n >= 8, got {grid_n}")
    tol = tol or Tolerances()
    L = isotopy.L
    spacing = L / grid_n
    seeds = _grid(L, grid_n)
    residual = np.linalg.norm(_wrapped_displacement(isotopy, seeds), axis=1)
    fixed = residual < tol.fixed
    movable = ~fixed & (residual < spacing)

    refined, refined_res = _newton_fixed(isotopy, seeds[movable], spacing, tol)
    converged = refined_res < tol.fixed
    candidates = wrap(refined[converged], L)
    candidate_res = refined_res[converged]

    points = [p for p in seeds[fixed]]
    residuals = [float(r) for r in residual[fixed]]
    tree = cKDTree(seeds[fixed], boxsize=L) if np.any(fixed) else None
    extra: List[np.ndarray] = []
    for idx in np.argsort(candidate_res, kind='stable'):
        p = candidates[idx]
        if tree is not None and tree.query(p, distance_upper_bound=spacing / 2)[0] < np.inf:
            continue
        if extra and np.min(np.linalg.norm(torus_delta(np.array(extra) - p, L), axis=1)) < spacing / 2:
            continue
        extra.append(p)
        points.append(p)
        residuals.append(float(candidate_res[idx]))

    records = []
    for p, res in zip(points, residuals):
        lifted_res = float(np.linalg.norm(isotopy.time_one(p) - p))
        records.append(FixedPointRecord(
            point=TorusPoint(p[0], p[1], L),
            lift=PlanePoint.from_array(p),
            contractible=lifted_res < tol.fixed,
            residual=res,
        ))
    logger.info("Found %d fixed points (%d by refinement) for %s",
                len(records), len(extra), isotopy.name)
    return records


def fixed_point_components(records: Sequence[FixedPointRecord], grid_n: int,
                           L: float) -> List[FixedPointComponent]:
    """Group sampled fixed points into components of their L/grid_n neighbourhood graph."""
    if not records:
        return []
    points = wrap(np.array([r.point.as_array() for r in records]), L)
    eps = L / grid_n
    pairs = cKDTree(points, boxsize=L).query_pairs(r=eps * (1 + 1e-6), output_type='ndarray')
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(records),) * 2)
    count, labels = connected_components(graph, directed=False)

    components = []
    for label in range(count):
        members = [int(i) for i in np.flatnonzero(labels == label)]
        best = min(members, key=lambda i: records[i].residual)
        components.append(FixedPointComponent(
            index=label,
            members=members,
            representative=records[best],
            contractible=all(records[i].contractible for i in members),
        ))
    components.sort(key=lambda c: c.members[0])
    for index, component in enumerate(components):
        component.index = index
    return components


def _check_fixed(isotopy: IsotopySpec, p: PlanePoint, tol: Tolerances) -> None:
    xy = p.as_array()
    residual = float(np.linalg.norm(isotopy.time_one(xy) - xy))
    if residual >= tol.fixed:
        raise NotFixed(f"Lift ({p.x:.6g}, {p.y:.6g}) is not fixed by F~ (residual {residual:.3e})")


def difference_path(isotopy: IsotopySpec, p: PlanePoint, q: PlanePoint,
                    tol: Optional[Tolerances] = None) -> PlanePath:
    """Curve t -> F~_t(q) - F~_t(p), refinable on the isotopy."""
    tol = tol or Tolerances()
    pts = np.stack([p.as_array(), q.as_array()])
    times = sample_times(isotopy.segments, tol.trajectory_steps)
    samples = sample_trajectories(isotopy, pts, times)

    def curve(ts):
        out = [isotopy.lifted(float(t), pts) for t in np.atleast_1d(ts)]
        return np.stack([o[1] - o[0] for o in out])

    return PlanePath(samples[1] - samples[0], curve=curve, times=times)


def linking_pair(isotopy: IsotopySpec, p: PlanePoint, q: PlanePoint,
                 tol: Optional[Tolerances] = None) -> int:
    """Linking number i(F~; p, q) of two distinct fixed lifts.

    Raises:
        NotFixed: If p or q is not fixed by F~
        ClearanceViolation: If the trajectories come within the clearance
            of each other
    """
    tol = tol or Tolerances()
    _check_fixed(isotopy, p, tol)
    _check_fixed(isotopy, q, tol)
    if (q - p).norm() <= tol.geom:
        raise LinkingError("Linking number needs two distinct lifts")
    return int(winding_number(difference_path(isotopy, p, q, tol), ORIGIN, tol))


def _shell_windings(path: PlanePath, radius: int, L: float, tol: Tolerances) -> List[int]:
    """Windings of path + alpha*L around 0 for alpha in one shell.

    The translate that brings the start onto the origin is the excluded
    diagonal and counts 0.
    """
    terms = []
    for alpha in shell(radius):
        shift = alpha.vector(L)
        if np.linalg.norm(path.start + shift) <= tol.geom:
            terms.append(0)
            continue
        terms.append(int(winding_number(path, PlanePoint(-shift[0], -shift[1]), tol)))
    return terms


def linking_at_fixed(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint, z: TorusPoint,
                     tol: Optional[Tolerances] = None) -> int:
    """Sum over lifts of z of i(F~; a, z~) - i(F~; b, z~).

    Shells of deck elements are added until two consecutive shells
    contribute nothing.

    Raises:
        NotContractibleFixed: If z is not a contractible fixed point
        ShellCapExceeded: If the shells keep contributing up to the cap
    """
    tol = tol or Tolerances()
    L = isotopy.L
    _check_fixed(isotopy, a, tol)
    _check_fixed(isotopy, b, tol)
    base = lift_near(z, a)
    residual = float(np.linalg.norm(isotopy.time_one(base.as_array()) - base.as_array()))
    if residual >= tol.fixed:
        raise NotContractibleFixed(f"({z.x:.6g}, {z.y:.6g}) is not a contractible fixed point")
    for p in (a, b):
        if project(p, L).distance(z) <= tol.geom:
            raise LinkingError("z must differ from the projections of a and b")

    path_a = difference_path(isotopy, a, base, tol)
    path_b = difference_path(isotopy, b, base, tol)
    total = 0
    quiet = 0
    radius = 0
    while quiet < 2:
        if radius > tol.shell_cap:
            raise ShellCapExceeded(f"Deck sum still changing at shell {tol.shell_cap}")
        terms = [ta - tb for ta, tb in zip(_shell_windings(path_a, radius, L, tol),
                                           _shell_windings(path_b, radius, L, tol))]
        total += sum(terms)
        quiet = 0 if any(terms) else quiet + 1
        radius += 1
    logger.debug("Deck sum closed after %d shells", radius)
    return total


def linking_matrix(isotopy: IsotopySpec, lifts: Sequence[PlanePoint],
                   labels: Optional[Sequence[str]] = None,
                   tol: Optional[Tolerances] = None, threads: int = 1) -> LinkingMatrix:
    """Symmetric integer matrix of pairwise linking numbers."""
    tol = tol or Tolerances()
    lifts = list(lifts)
    labels = list(labels) if labels is not None else [f"p{i}" for i in range(len(lifts))]
    pairs = [(i, j) for i in range(len(lifts)) for j in range(i + 1, len(lifts))]

    def compute(pair):
        i, j = pair
        return linking_pair(isotopy, lifts[i], lifts[j], tol)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = list(executor.map(compute, pairs))

    values = np.zeros((len(lifts), len(lifts)), dtype=np.int64)
    for (i, j), value in zip(pairs, results):
        values[i, j] = values[j, i] = value
    return LinkingMatrix(labels, lifts, values)


def wb_diagnostic(isotopy: IsotopySpec, lifts: Sequence[PlanePoint],
                  labels: Optional[Sequence[str]] = None,
                  tol: Optional[Tolerances] = None, threads: int = 1) -> WBReport:
    """Per-lift and global bounds of |i(F~; a, b)| over a finite set of fixed lifts."""
    matrix = linking_matrix(isotopy, lifts, labels, tol, threads)
    row_bounds = {}
    for i, label in enumerate(matrix.labels):
        others = np.delete(np.abs(matrix.values[i]), i)
        row_bounds[label] = int(others.max()) if len(others) else 0
    global_bound = max(row_bounds.values(), default=0)
    rows_at_max = [label for label, bound in row_bounds.items() if bound == global_bound]
    return WBReport(matrix.labels, row_bounds, global_bound, rows_at_max)


def check_linking_properties(isotopy: IsotopySpec, samples: Sequence[PlanePoint], seed: int = 0,
                             tol: Optional[Tolerances] = None) -> PropertyReport:
    """Check local constancy, deck invariance, same-fiber vanishing and
    vanishing at large distance on sampled fixed lifts.
    """
    tol = tol or Tolerances()
    L = isotopy.L
    samples = list(samples)
    report = PropertyReport()
    rng = counter_rng(seed, 1)

    def deck_vector():
        while True:
            m, n = (int(v) for v in rng.integers(-3, 4, size=2))
            if (m, n) != (0, 0):
                return np.array([m * L, n * L])

    def shifted(p, v):
        return PlanePoint(p.x + v[0], p.y + v[1])

    # local constancy inside fixed continua
    delta = 1e-3 * L
    directions = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
    for i, p in enumerate(samples):
        for dx, dy in directions:
            moved = PlanePoint(p.x + delta * dx, p.y + delta * dy)
            xy = moved.as_array()
            if np.linalg.norm(isotopy.time_one(xy) - xy) >= tol.fixed:
                continue
            for j, q in enumerate(samples):
                if i == j or (q - p).norm() <= 2 * delta:
                    continue
                report.checks['locally_constant'] += 1
                if linking_pair(isotopy, moved, q, tol) != linking_pair(isotopy, p, q, tol):
                    report.locally_constant = False
                    report.failures.append(f"local constancy at sample {i} against {j}")

    for i, p in enumerate(samples):
        for j, q in enumerate(samples):
            if j <= i:
                continue
            v = deck_vector()
            report.checks['deck_invariant'] += 1
            if linking_pair(isotopy, shifted(p, v), shifted(q, v), tol) != linking_pair(isotopy, p, q, tol):
                report.deck_invariant = False
                report.failures.append(f"deck invariance on pair ({i}, {j})")

    for i, p in enumerate(samples):
        report.checks['same_fiber_zero'] += 1
        if linking_pair(isotopy, p, shifted(p, deck_vector()), tol) != 0:
            report.same_fiber_zero = False
            report.failures.append(f"same-fiber zero at sample {i}")

    for i, p in enumerate(samples):
        for j, q in enumerate(samples):
            if j <= i:
                continue
            report.checks['vanishing'] += 1
            _check_fixed(isotopy, p, tol)
            _check_fixed(isotopy, q, tol)
            path = difference_path(isotopy, p, q, tol)
            quiet = 0
            radius = 0
            while quiet < 2 and radius <= tol.shell_cap:
                nonzero = False
                for alpha, term in zip(shell(radius), _shell_windings(path, radius, L, tol)):
                    if term:
                        nonzero = True
                        gap = float(np.linalg.norm(q.as_array() + alpha.vector(L) - p.as_array()))
                        report.vanishing_radius = max(report.vanishing_radius, gap)
                quiet = 0 if nonzero else quiet + 1
                radius += 1
            if quiet < 2:
                report.vanishing = False
                report.failures.append(f"vanishing on pair ({i}, {j}): no vanishing before shell {tol.shell_cap}")

    logger.info("Linking properties on %d samples: %s", len(samples),
                "pass" if report.passed else "; ".join(report.failures))
    return report
