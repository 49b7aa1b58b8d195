"""First returns to free disks, Birkhoff intersection sums and rotation vectors of points."""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from torusaction.dynamics.isotopy import (
    IsotopySpec,
    PlaneIsotopy,
    normalize_fixing_two,
    sample_times,
)
from torusaction.exceptions import CapExceeded, DiskError, NotConverged, TruncationUnverified
from torusaction.geometry.cover import (
    PlanePoint,
    TorusPoint,
    deck_between,
    lift_near,
    lift_near_array,
    project,
    torus_delta,
)
from torusaction.geometry.paths import PlanePath, crossing_with_retry
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETURNS = 4096


@dataclass(frozen=True)
class ReturnDisk:
    """Open disk U on the torus used for first returns."""
    center: TorusPoint
    radius: float
    cap: int = 1_000_000

    def __post_init__(self):
        if self.radius <= 0 or self.radius >= self.center.L / 4:
            raise DiskError(f"Return disk radius must lie in (0, L/4), got {self.radius}")
        if self.cap < 1:
            raise DiskError(f"Return cap must be positive, got {self.cap}")

    @property
    def L(self) -> float:
        return self.center.L

    def contains(self, xy) -> bool:
        """Whether a plane or torus position projects into the disk."""
        d = torus_delta(np.asarray(xy, dtype=float) - self.center.as_array(), self.L)
        return bool(np.hypot(d[0], d[1]) < self.radius)

    def check_avoids(self, *points: PlanePoint) -> None:
        """Raise DiskError if the closed disk meets the projection of a point."""
        for p in points:
            if project(p, self.L).distance(self.center) <= self.radius:
                raise DiskError(f"Return disk meets the projection of ({p.x:.6g}, {p.y:.6g})")

    def to_dict(self) -> Dict[str, Any]:
        return {'center': [self.center.x, self.center.y], 'radius': self.radius, 'cap': self.cap}


@dataclass
class ReturnOrbit:
    """Successive first returns of a point to a disk.

    `lifted[j]` is F~^{tau_j}(z~) for the lift z~ = (z.x, z.y), so
    `lifted[0]` is the base lift.
    """
    base: TorusPoint
    return_times: List[int]
    return_points: List[TorusPoint]
    lifted: np.ndarray

    @property
    def cumulative(self) -> List[int]:
        """tau_0 = 0, tau_1, ..., tau_n."""
        total = [0]
        for tau in self.return_times:
            total.append(total[-1] + tau)
        return total

    def to_dict(self) -> Dict[str, Any]:
        return {
            'base': [self.base.x, self.base.y],
            'return_times': self.return_times,
            'return_points': [[p.x, p.y] for p in self.return_points],
            'cumulative': self.cumulative,
        }


@dataclass
class RecurrentLinking:
    """Estimate of the linking number of a recurrent point with two fixed lifts."""
    value: float
    exact: Optional[Fraction]
    spread: float
    returns: int
    iterations: int

    @property
    def periodic(self) -> bool:
        return self.exact is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'value': self.value,
            'exact': str(self.exact) if self.exact is not None else None,
            'spread': self.spread,
            'returns': self.returns,
            'iterations': self.iterations,
        }


@dataclass
class PointRotation:
    """Rotation vector of a recurrent point, in plane units per iterate."""
    vector: np.ndarray
    exact: Optional[Tuple[Fraction, Fraction]]
    spread: float
    returns: int
    iterations: int
    deck: Tuple[int, int] = field(default=(0, 0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'vector': [float(v) for v in self.vector],
            'exact': [str(f) for f in self.exact] if self.exact is not None else None,
            'spread': self.spread,
            'returns': self.returns,
            'iterations': self.iterations,
        }


def _advance(isotopy: IsotopySpec, disk: ReturnDisk, w: np.ndarray) -> Tuple[int, np.ndarray]:
    """Iterate F~ from the lift w until the projection re-enters the disk."""
    for n in range(1, disk.cap + 1):
        w = isotopy.time_one(w)
        if disk.contains(w):
            return n, w
    raise CapExceeded(f"No return to the disk within {disk.cap} iterates")


def first_return(isotopy: IsotopySpec, disk: ReturnDisk, z: TorusPoint) -> Tuple[int, TorusPoint]:
    """Least n >= 1 with F^n(z) in the disk, and that point.

    Raises:
        DiskError: If z is not in the disk
        CapExceeded: If z does not return within the cap
    """
    if not disk.contains(z.as_array()):
        raise DiskError(f"({z.x:.6g}, {z.y:.6g}) is not in the return disk")
    tau, w = _advance(isotopy, disk, z.as_array())
    return tau, TorusPoint(w[0], w[1], isotopy.L)


def return_orbit(isotopy: IsotopySpec, disk: ReturnDisk, z: TorusPoint, n: int) -> ReturnOrbit:
    """The first n returns of z to the disk."""
    if n < 1:
        raise ValueError(f"Number of returns must be positive, got {n}")
    if not disk.contains(z.as_array()):
        raise DiskError(f"({z.x:.6g}, {z.y:.6g}) is not in the return disk")
    w = z.as_array()
    lifted = [w]
    times: List[int] = []
    points: List[TorusPoint] = []
    for _ in range(n):
        tau, w = _advance(isotopy, disk, w)
        times.append(tau)
        points.append(TorusPoint(w[0], w[1], isotopy.L))
        lifted.append(w)
    return ReturnOrbit(z, times, points, np.array(lifted))


def _family_vertices(plane: PlaneIsotopy, z: TorusPoint, starts: np.ndarray, iterates: int,
                     steps: int, radius: float, chord_bend: float) -> np.ndarray:
    """Normalized iterates-step trajectories of starts, closed by chords to lifts of z.

    Returns an (N, V, 2) array of polyline vertices.
    """
    L = z.L
    unit = sample_times(plane.segments, steps)
    w = np.asarray(starts, dtype=float)
    pieces = [w[:, None, :]]
    for _ in range(iterates):
        samples = np.stack([plane.lifted(float(t), w) for t in unit[1:]], axis=1)
        pieces.append(samples)
        w = samples[:, -1, :]
    end = w
    target = lift_near_array(np.broadcast_to(z.as_array(), end.shape), end, L)
    if chord_bend:
        chord = target - end
        normal = np.stack([-chord[:, 1], chord[:, 0]], axis=-1)
        length = np.linalg.norm(normal, axis=1, keepdims=True)
        with np.errstate(invalid='ignore', divide='ignore'):
            normal = np.where(length > 0, normal / length, 0.0)
        pieces.append((0.5 * (end + target) + chord_bend * radius * normal)[:, None, :])
    pieces.append(target[:, None, :])
    return np.concatenate(pieces, axis=1)


def _deck_window(lo: np.ndarray, hi: np.ndarray, tlo: np.ndarray, thi: np.ndarray,
                 margin: float, L: float) -> List[Tuple[int, int]]:
    """Deck elements moving the box [lo, hi] within margin of the box [tlo, thi]."""
    first = np.ceil((tlo - margin - hi) / L).astype(int)
    last = np.floor((thi + margin - lo) / L).astype(int)
    return [(m, n) for m in range(first[0], last[0] + 1) for n in range(first[1], last[1] + 1)]


def _family(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint, z: TorusPoint, disk: ReturnDisk,
            iterates: int, tol: Tolerances, chord_bend: float = 0.0):
    """Candidate and verification-ring families of lifted closed-up trajectories."""
    L = isotopy.L
    plane = normalize_fixing_two(isotopy, a, b, tol)
    mid = PlanePoint(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
    base = lift_near(z, mid).as_array()
    steps = tol.trajectory_steps

    base_path = _family_vertices(plane, z, base[None, :], iterates, steps, disk.radius, chord_bend)[0]
    lo, hi = base_path.min(axis=0), base_path.max(axis=0)
    ends = np.stack([a.as_array(), b.as_array()])
    tlo, thi = ends.min(axis=0), ends.max(axis=0)
    near = _deck_window(lo, hi, tlo, thi, L, L)
    inner = set(near)
    ring = [alpha for alpha in _deck_window(lo, hi, tlo, thi, 2 * L, L) if alpha not in inner]

    def build(alphas):
        if not alphas:
            return np.zeros((0, base_path.shape[0], 2))
        starts = base[None, :] + L * np.array(alphas, dtype=float)
        return _family_vertices(plane, z, starts, iterates, steps, disk.radius, chord_bend)

    return near, build(near), ring, build(ring)


def _signed_count(family: Tuple[np.ndarray, np.ndarray], a: PlanePoint, b: PlanePoint, L: float, seed: int,
                  tol: Tolerances) -> Tuple[int, int]:
    """Crossings of the transversal a -> b with the candidate and ring families."""
    near, ring = family
    counts_near, counts_ring = crossing_with_retry(a.as_array(), b.as_array(), (near, ring), L, seed, tol)
    return int(counts_near.sum()), int(counts_ring.sum())


def _check_configuration(disk: ReturnDisk, a: PlanePoint, b: PlanePoint, z: TorusPoint) -> None:
    disk.check_avoids(a, b)
    if not disk.contains(z.as_array()):
        raise DiskError(f"({z.x:.6g}, {z.y:.6g}) is not in the return disk")


def _polyline(vertices: np.ndarray) -> PlanePath:
    keep = np.concatenate([[True], np.any(np.diff(vertices, axis=0) != 0, axis=1)])
    vertices = vertices[keep]
    if len(vertices) < 2:
        return PlanePath.point(vertices[0])
    return PlanePath(vertices)


def closed_family(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint, z: TorusPoint,
                  disk: ReturnDisk, n: int, tol: Optional[Tolerances] = None,
                  chord_bend: float = 0.0) -> List[PlanePath]:
    """Lifted, normalized orbit segments up to the n-th return, closed by in-disk chords.

    One path per deck translate whose bounding box comes within L of the
    segment from a to b.
    """
    tol = tol or Tolerances()
    _check_configuration(disk, a, b, z)
    tau = return_orbit(isotopy, disk, z, n).cumulative[-1]
    _, near, _, _ = _family(isotopy, a, b, z, disk, tau, tol, chord_bend)
    return [_polyline(vertices) for vertices in near]


def birkhoff_L(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint, z: TorusPoint,
               disk: ReturnDisk, n: int, tol: Optional[Tolerances] = None, seed: int = 0,
               chord_bend: float = 0.0) -> int:
    """Signed intersection L_n of the segment a -> b with the closed-up orbit family.

    Args:
        isotopy: Isotopy with a and b among the fixed lifts of F~
        a: First fixed lift
        b: Second fixed lift
        z: Recurrent point in the disk
        disk: Return disk avoiding the projections of a and b
        n: Number of returns
        tol: Tolerances
        seed: Seed for transversal jitter
        chord_bend: Offset of the closing chord midpoint, in disk radii

    Returns:
        Integer L_n

    Raises:
        TruncationUnverified: If translates beyond the candidate window
            change the count
    """
    tol = tol or Tolerances()
    _check_configuration(disk, a, b, z)
    tau = return_orbit(isotopy, disk, z, n).cumulative[-1]
    _, near, _, ring = _family(isotopy, a, b, z, disk, tau, tol, chord_bend)
    value, outside = _signed_count((near, ring), a, b, isotopy.L, seed, tol)
    if outside != 0:
        raise TruncationUnverified(f"Translates outside the window contribute {outside}")
    logger.debug("L_%d = %d over %d iterates", n, value, tau)
    return value


def _return_increment(isotopy, a, b, z, disk, tau, tol, seed) -> int:
    _, near, _, ring = _family(isotopy, a, b, z, disk, tau, tol)
    value, outside = _signed_count((near, ring), a, b, isotopy.L, seed, tol)
    if outside != 0:
        raise TruncationUnverified(f"Translates outside the window contribute {outside}")
    return value


def _is_periodic(isotopy: IsotopySpec, start: np.ndarray, end: np.ndarray, tol: Tolerances) -> bool:
    return float(np.linalg.norm(torus_delta(end - start, isotopy.L))) < tol.fixed


def recurrent_linking(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint, z: TorusPoint,
                      disk: ReturnDisk, tol: Optional[Tolerances] = None, seed: int = 0,
                      max_returns: int = DEFAULT_MAX_RETURNS) -> RecurrentLinking:
    """Limit of L_n / tau_n along the returns of z to the disk.

    A periodic point gives the exact rational L_1 / tau_1 once the
    doubled period agrees with it within `conv_periodic`. Otherwise the
    ratio is tracked return by return until the last `window` estimates
    lie within `conv` of each other.

    Raises:
        NotConverged: If the spread stays above the tolerance
    """
    tol = tol or Tolerances()
    _check_configuration(disk, a, b, z)
    start = z.as_array()
    tau, end = _advance(isotopy, disk, start)
    if _is_periodic(isotopy, start, end, tol):
        exact = Fraction(_return_increment(isotopy, a, b, z, disk, tau, tol, seed), tau)
        twice = _return_increment(isotopy, a, b, z, disk, 2 * tau, tol, seed)
        deviation = abs(twice / (2 * tau) - float(exact))
        if deviation <= tol.conv_periodic:
            return RecurrentLinking(float(exact), exact, deviation, 1, tau)
        logger.warning("Periodic orbit of period %d disagrees with its double period by %.3e, "
                       "averaging returns instead", tau, deviation)

    total_L = 0
    total_tau = 0
    ratios: List[float] = []
    current = z
    spread = float('inf')
    for returns in range(1, max_returns + 1):
        total_L += _return_increment(isotopy, a, b, current, disk, tau, tol, seed)
        total_tau += tau
        ratios.append(total_L / total_tau)
        if len(ratios) >= tol.window:
            window = ratios[-tol.window:]
            spread = max(window) - min(window)
            if spread < tol.conv:
                return RecurrentLinking(ratios[-1], None, spread, returns, total_tau)
        if total_tau >= disk.cap:
            break
        current = TorusPoint(end[0], end[1], isotopy.L)
        tau, end = _advance(isotopy, disk, current.as_array())
    raise NotConverged(f"Recurrent linking spread {spread:.3e} above {tol.conv:g} "
                       f"after {len(ratios)} returns")


def rotation_vector_point(isotopy: IsotopySpec, z: TorusPoint, disk: ReturnDisk,
                          tol: Optional[Tolerances] = None,
                          max_returns: int = DEFAULT_MAX_RETURNS) -> PointRotation:
    """Rotation vector of z: homology of the closed-up orbit per iterate.

    The class of each closed-up orbit segment is the deck element carrying
    the base lift to the lift of z reached after the closing chord.
    """
    tol = tol or Tolerances()
    L = isotopy.L
    if not disk.contains(z.as_array()):
        raise DiskError(f"({z.x:.6g}, {z.y:.6g}) is not in the return disk")
    start = z.as_array()
    tau, end = _advance(isotopy, disk, start)
    if _is_periodic(isotopy, start, end, tol):
        m, n = deck_between(start, lift_near_array(start, end, L), L)
        exact = (Fraction(m, tau), Fraction(n, tau))
        vector = np.array([float(exact[0] * Fraction(L)), float(exact[1] * Fraction(L))])
        return PointRotation(vector, exact, 0.0, 1, tau, (m, n))

    total_tau = 0
    estimates: List[np.ndarray] = []
    spread = float('inf')
    deck = (0, 0)
    for returns in range(1, max_returns + 1):
        total_tau += tau
        deck = deck_between(start, lift_near_array(start, end, L), L)
        estimates.append(np.array(deck, dtype=float) * L / total_tau)
        if len(estimates) >= tol.window:
            window = np.array(estimates[-tol.window:])
            spread = float(np.max(window.max(axis=0) - window.min(axis=0)))
            if spread < tol.conv:
                return PointRotation(estimates[-1], None, spread, returns, total_tau, deck)
        if total_tau >= disk.cap:
            break
        step, end = _advance(isotopy, disk, end)
        tau = step
    raise NotConverged(f"Rotation vector spread {spread:.3e} above {tol.conv:g} "
                       f"after {len(estimates)} returns")


def default_disk(z: TorusPoint, avoid: Sequence[np.ndarray] = (), fraction: float = 0.25,
                 cap: int = 1_000_000) -> ReturnDisk:
    """Disk at z small enough to miss the given torus positions."""
    L = z.L
    radius = L / 8
    for p in avoid:
        gap = float(np.linalg.norm(torus_delta(np.asarray(p, dtype=float) - z.as_array(), L)))
        if gap > 0:
            radius = min(radius, fraction * gap)
    return ReturnDisk(z, radius, cap)
