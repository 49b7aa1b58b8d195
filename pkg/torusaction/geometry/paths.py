"""Oriented polylines in the plane, winding numbers and signed crossings.

Orientation convention: a crossing counts +1 when the second path
crosses the first from its right-hand side to its left-hand side, the
plane carrying its standard orientation. With this convention the
crossing count of a segment from a to b against a closed loop equals
winding(loop, a) - winding(loop, b).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from torusaction.exceptions import (
    ClearanceViolation,
    DegenerateIncidence,
    IntegralityError,
    RefinementExhausted,
)
from torusaction.geometry.cover import PlanePoint
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

# Relative tolerance on segment parameters when classifying incidences
PARAM_EPS = 1e-12
# Endpoints closer than this make a path closed
CLOSE_TOL = 1e-9

Curve = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PlanePath:
    """Oriented polyline, optionally backed by the curve it samples.

    When `curve` is given, `times` holds the parameter of every vertex
    and `curve(times)` reproduces the vertices; refinement then queries
    the curve instead of interpolating.
    """
    vertices: np.ndarray
    curve: Optional[Curve] = None
    times: Optional[np.ndarray] = None
    degenerate: bool = field(default=False)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, 'vertices', vertices)
        if self.degenerate:
            return
        if len(vertices) < 2:
            raise ValueError("A path needs at least 2 vertices")
        if self.curve is None:
            steps = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
            if np.any(steps == 0):
                raise ValueError("Consecutive vertices of a polyline must be distinct")
        elif self.times is None or len(self.times) != len(vertices):
            raise ValueError("A curve-backed path needs one time per vertex")

    @classmethod
    def from_points(cls, points: Sequence[PlanePoint]) -> 'PlanePath':
        """Create a polyline from plane points."""
        return cls(np.array([[p.x, p.y] for p in points]))

    @classmethod
    def segment(cls, a: PlanePoint, b: PlanePoint) -> 'PlanePath':
        """Straight segment from a to b."""
        return cls.from_points([a, b])

    @classmethod
    def point(cls, p) -> 'PlanePath':
        """Degenerate one-vertex path (trajectory of a static point)."""
        return cls(np.asarray(p, dtype=float).reshape(1, 2), degenerate=True)

    @property
    def closed(self) -> bool:
        """True when the last vertex equals the first."""
        return bool(np.linalg.norm(self.vertices[0] - self.vertices[-1]) <= CLOSE_TOL)

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    def translate(self, offset) -> 'PlanePath':
        """Deck-translate (or generally shift) the path."""
        offset = np.asarray(offset, dtype=float)
        curve = None
        if self.curve is not None:
            base = self.curve
            curve = lambda t: base(t) + offset
        return PlanePath(self.vertices + offset, curve, self.times, self.degenerate)

    def reversed(self) -> 'PlanePath':
        """Same path with opposite orientation."""
        curve = None
        times = None
        if self.curve is not None:
            base = self.curve
            t_max = self.times[-1] + self.times[0]
            curve = lambda t: base(t_max - t)
            times = (t_max - self.times)[::-1]
        return PlanePath(self.vertices[::-1], curve, times, self.degenerate)

    def then(self, other: 'PlanePath') -> 'PlanePath':
        """Concatenate as polylines; other must start where self ends."""
        if self.degenerate:
            return other
        if other.degenerate:
            return self
        tail = other.vertices
        if np.array_equal(self.vertices[-1], tail[0]):
            tail = tail[1:]
        vertices = np.vstack([self.vertices, tail])
        keep = np.concatenate([[True], np.any(np.diff(vertices, axis=0) != 0, axis=1)])
        return PlanePath(vertices[keep])

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box (min corner, max corner)."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _angle_increments(rel: np.ndarray) -> np.ndarray:
    """Signed angle between consecutive vectors of rel (k, 2)."""
    a, b = rel[:-1], rel[1:]
    return np.arctan2(_cross(a, b), np.einsum('ij,ij->i', a, b))


def _segment_distances(rel: np.ndarray) -> np.ndarray:
    """Distance from the origin to each segment of the polyline rel."""
    a, b = rel[:-1], rel[1:]
    d = b - a
    length2 = np.einsum('ij,ij->i', d, d)
    with np.errstate(invalid='ignore', divide='ignore'):
        s = np.clip(-np.einsum('ij,ij->i', a, d) / length2, 0.0, 1.0)
    s = np.where(length2 > 0, s, 0.0)
    return np.linalg.norm(a + s[:, None] * d, axis=1)


def winding_number(path: PlanePath, w: PlanePoint, refine: Optional[Tolerances] = None) -> float:
    """Total angle swept around w divided by 2*pi.

    Increments larger than the angle bound are bisected on the path's
    generating curve until every increment is below it.

    Args:
        path: Oriented path, optionally curve-backed
        w: Center point
        refine: Tolerances (clearance, angle bound, depth cap)

    Returns:
        Winding number; an exact integer value for closed paths

    Raises:
        ClearanceViolation: If w is within the clearance of the path
        RefinementExhausted: If bisection reaches the depth cap
        IntegralityError: If a closed path gives a non-integer total
    """
    tol = refine or Tolerances()
    center = np.array([w.x, w.y])
    rel = path.vertices - center

    if path.degenerate:
        if np.linalg.norm(rel[0]) <= tol.geom:
            raise ClearanceViolation(f"Point {w} lies on a constant path")
        return 0.0

    distances = _segment_distances(rel)
    if np.min(distances) <= tol.geom:
        raise ClearanceViolation(
            f"Point ({w.x:.6g}, {w.y:.6g}) within {tol.geom:g} of path"
        )

    if path.closed:
        rel[-1] = rel[0]
    increments = _angle_increments(rel)
    large = np.flatnonzero(np.abs(increments) >= tol.angle_bound)
    if len(large) and path.curve is not None:
        for idx in large:
            increments[idx] = _refined_increment(
                path.curve, path.times[idx], path.times[idx + 1],
                rel[idx], rel[idx + 1], center, tol
            )

    total = float(math.fsum(increments)) / (2 * math.pi)
    if not path.closed:
        return total

    nearest = round(total)
    if abs(total - nearest) > tol.integral:
        raise IntegralityError(f"Closed path winding {total!r} is not an integer")
    return float(nearest)


def _refined_increment(curve: Curve, t0: float, t1: float, r0: np.ndarray, r1: np.ndarray,
                       center: np.ndarray, tol: Tolerances) -> float:
    """Angle swept by the curve on [t0, t1], bisecting until increments are small."""
    total = 0.0
    stack = [(t0, t1, r0, r1, 0)]
    while stack:
        a, b, ra, rb, depth = stack.pop()
        step = math.atan2(float(_cross(ra, rb)), float(np.dot(ra, rb)))
        if abs(step) < tol.angle_bound:
            total += step
            continue
        if depth >= tol.refine_depth:
            raise RefinementExhausted(
                f"Refinement depth {tol.refine_depth} reached on [{a:.6g}, {b:.6g}]"
            )
        mid = 0.5 * (a + b)
        rm = np.asarray(curve(np.array([mid])), dtype=float).reshape(2) - center
        if np.linalg.norm(rm) <= tol.geom:
            raise ClearanceViolation("Refined curve passes through the center point")
        # pushed in reverse so the stack processes [a, mid] first
        stack.append((mid, b, rm, rb, depth + 1))
        stack.append((a, mid, ra, rm, depth + 1))
    logger.debug("Refined winding increment on [%g, %g]", t0, t1)
    return total


def segment_crossings(p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray,
                      eps: float = PARAM_EPS) -> Tuple[np.ndarray, np.ndarray]:
    """Signed transversal crossings of segments q against segments p.

    All arguments broadcast as (..., 2) arrays.

    Returns:
        Tuple of (sign array in {-1, 0, 1}, degenerate mask). A crossing is
        +1 when q passes from the right of p to its left. Incidences where
        an endpoint lies on the other segment, or collinear overlaps, are
        reported in the mask instead of being counted.
    """
    r = p1 - p0
    s = q1 - q0
    qp = q0 - p0
    denom = _cross(r, s)
    scale = np.linalg.norm(r, axis=-1) * np.linalg.norm(s, axis=-1)
    parallel = np.abs(denom) <= 1e-14 * scale

    with np.errstate(invalid='ignore', divide='ignore'):
        t = np.where(parallel, np.nan, _cross(qp, s) / denom)
        u = np.where(parallel, np.nan, _cross(qp, r) / denom)

    inside = (t > eps) & (t < 1 - eps) & (u > eps) & (u < 1 - eps)
    touching = (t >= -eps) & (t <= 1 + eps) & (u >= -eps) & (u <= 1 + eps) & ~inside

    # collinear overlap of parallel segments
    r_len2 = np.einsum('...i,...i->...', r, r)
    with np.errstate(invalid='ignore', divide='ignore'):
        off_line = np.abs(_cross(qp, r)) / np.sqrt(r_len2)
        a = np.einsum('...i,...i->...', qp, r) / r_len2
        b = np.einsum('...i,...i->...', q1 - p0, r) / r_len2
    collinear = parallel & (off_line <= eps * np.sqrt(r_len2)) & \
        (np.maximum(a, b) >= -eps) & (np.minimum(a, b) <= 1 + eps)

    valid = scale > 0
    sign = np.where(inside & valid, np.sign(denom), 0).astype(np.int64)
    degenerate = (touching | collinear) & valid
    return sign, degenerate


def algebraic_intersection(a: PlanePath, b: PlanePath) -> int:
    """Signed count of transversal crossings of b against a.

    Args:
        a: First path
        b: Second path

    Returns:
        Sum over crossings of +1 (b crosses a from right to left) or -1

    Raises:
        DegenerateIncidence: If an endpoint lies on the other path or
            segments overlap
    """
    if a.degenerate or b.degenerate:
        return 0
    av, bv = a.vertices, b.vertices
    sign, degenerate = segment_crossings(
        av[:-1, None, :], av[1:, None, :], bv[None, :-1, :], bv[None, 1:, :]
    )
    if np.any(degenerate):
        raise DegenerateIncidence("Paths touch at a vertex or overlap")
    return int(sign.sum())


def crossing_counts(transversal: np.ndarray, polylines: np.ndarray,
                    eps: float = PARAM_EPS) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized algebraic_intersection(transversal, polyline) for many polylines.

    Args:
        transversal: Vertices (T, 2) of the first path
        polylines: Vertices (N, S, 2) of N second paths

    Returns:
        Tuple of (counts (N,), degenerate mask (N,))
    """
    counts = np.zeros(polylines.shape[0], dtype=np.int64)
    degenerate = np.zeros(polylines.shape[0], dtype=bool)
    q0 = polylines[:, :-1, :]
    q1 = polylines[:, 1:, :]
    for k in range(len(transversal) - 1):
        sign, touch = segment_crossings(transversal[k], transversal[k + 1], q0, q1)
        counts += sign.sum(axis=1)
        degenerate |= touch.any(axis=1)
    return counts, degenerate


def counter_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by the scenario seed.

    Each (seed, stream) pair yields an independent, reproducible stream.
    """
    counter = list(stream)[:4] + [0] * (4 - min(len(stream), 4))
    return np.random.Generator(np.random.Philox(key=seed % (1 << 64), counter=counter))


def jittered_transversal(a: np.ndarray, b: np.ndarray, L: float, seed: int, attempt: int,
                         scale: float = 1e-7) -> np.ndarray:
    """Transversal from a to b, bent at its midpoint by a tiny offset.

    Attempt 0 is the straight segment; later attempts bend it by
    scale * L in a direction drawn from the seed.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if attempt == 0:
        return np.vstack([a, b])
    angle = counter_rng(seed, attempt).uniform(0.0, 2 * np.pi)
    offset = scale * L * np.array([math.cos(angle), math.sin(angle)])
    return np.vstack([a, 0.5 * (a + b) + offset, b])


def crossing_with_retry(a: np.ndarray, b: np.ndarray, families: Sequence[np.ndarray], L: float,
                        seed: int, tol: Tolerances) -> List[np.ndarray]:
    """Signed crossings of the transversal a -> b against families of polylines.

    Every family is counted against the same transversal. When any
    polyline meets it degenerately, the transversal is bent by a seeded
    jitter and all families are counted again.

    Args:
        a: Start of the transversal
        b: End of the transversal
        families: Arrays (N_k, S_k, 2) of polylines, possibly empty
        L: Torus modulus, scales the jitter
        seed: Scenario seed
        tol: Tolerances giving jitter_attempts and jitter_scale

    Returns:
        One integer count array (N_k,) per family

    Raises:
        DegenerateIncidence: If every attempt is degenerate
    """
    for attempt in range(tol.jitter_attempts + 1):
        transversal = jittered_transversal(a, b, L, seed, attempt, tol.jitter_scale)
        counts = []
        degenerate = False
        for polylines in families:
            if len(polylines) == 0:
                counts.append(np.zeros(0, dtype=np.int64))
                continue
            c, d = crossing_counts(transversal, polylines)
            counts.append(c)
            degenerate |= bool(d.any())
        if not degenerate:
            return counts
        logger.warning("Degenerate incidence on transversal, retry %d", attempt + 1)
    raise DegenerateIncidence(
        f"Transversal still degenerate after {tol.jitter_attempts} jittered attempts"
    )
