"""Identity isotopies on the torus and their canonical lifts.

Isotopies are closed-form evaluators on (..., 2) coordinate arrays, so
every quantity downstream can re-evaluate them at refined times.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from torusaction.exceptions import DegenerateDenominator, InversionDiverged, NotFixed
from torusaction.geometry.cover import PlanePoint, TorusPoint
from torusaction.geometry.paths import PlanePath
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

LiftedMap = Callable[[float, np.ndarray], np.ndarray]
PointMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class IsotopySpec:
    """Identity isotopy I = (F_t) on the torus, given by its lift.

    `lifted(t, xy)` evaluates the lifted isotopy on any (..., 2) array.
    It commutes with deck translations, so the torus evaluator is
    obtained by projecting. `hamiltonian`, when known, is an autonomous
    function on plane coordinates generating the isotopy (dH = -i_X omega).
    """
    name: str
    lifted: LiftedMap
    L: float
    smoothness: str = "smooth"
    inverse_one: Optional[PointMap] = None
    segments: int = 1
    family: str = "custom"
    params: Dict[str, Any] = field(default_factory=dict)
    hamiltonian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def lifted_evaluator(self, t: float, p: PlanePoint) -> PlanePoint:
        """Evaluate F~_t at a plane point."""
        return PlanePoint.from_array(self.lifted(t, p.as_array()))

    def evaluator(self, t: float, z: TorusPoint) -> TorusPoint:
        """Evaluate F_t at a torus point."""
        image = self.lifted(t, np.array([z.x, z.y]))
        return TorusPoint(image[0], image[1], self.L)

    def time_one(self, xy: np.ndarray) -> np.ndarray:
        """Lifted time-one map F~."""
        return self.lifted(1.0, np.asarray(xy, dtype=float))

    def time_one_inverse(self, xy: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Inverse of the lifted time-one map, analytic when available."""
        xy = np.asarray(xy, dtype=float)
        if self.inverse_one is not None:
            return self.inverse_one(xy)
        return newton_inverse(self.time_one, xy, tol * max(1.0, self.L))

    def iterate(self, xy: np.ndarray, k: int) -> np.ndarray:
        """Apply F~ k times."""
        out = np.asarray(xy, dtype=float)
        for _ in range(k):
            out = self.time_one(out)
        return out

    def describe(self) -> Dict[str, Any]:
        """Serializable description for reports."""
        return {
            'name': self.name,
            'family': self.family,
            'params': self.params,
            'smoothness': self.smoothness,
            'segments': self.segments,
            'L': self.L,
        }


@dataclass(frozen=True, eq=False)
class PlaneIsotopy:
    """Isotopy of the plane, not necessarily deck equivariant.

    Built from a torus isotopy and two fixed lifts a, b as
    w -> m_t * (F~_t(w) - F~_t(a)) + a in complex notation, where
    m_t = (b - a) / (F~_t(b) - F~_t(a)). Translating w by a deck vector v
    moves the image by m_t * v. When a and b never move, m_t = 1 and the
    isotopy is F~_t itself (`static`).
    """
    source: IsotopySpec
    a: complex
    b: complex
    static: bool
    clearance: float = 1e-9

    @property
    def segments(self) -> int:
        return self.source.segments

    def frame(self, t: float) -> Tuple[complex, complex]:
        """Multiplier m_t and the image F~_t(a)."""
        if self.static:
            return 1.0 + 0.0j, self.a
        pts = np.array([[self.a.real, self.a.imag], [self.b.real, self.b.imag]])
        fa, fb = self.source.lifted(t, pts)
        za = complex(fa[0], fa[1])
        den = complex(fb[0], fb[1]) - za
        if abs(den) < self.clearance:
            raise DegenerateDenominator(f"F~_t(b) - F~_t(a) vanishes at t={t:.6g}")
        return (self.b - self.a) / den, za

    def multiplier(self, t: float) -> complex:
        return self.frame(t)[0]

    def renormalize(self, t: float, image: np.ndarray) -> np.ndarray:
        """Apply the similarity of time t to F~_t images."""
        if self.static:
            return image
        m, za = self.frame(t)
        w = m * (image[..., 0] + 1j * image[..., 1] - za) + self.a
        return np.stack([w.real, w.imag], axis=-1)

    def lifted(self, t: float, xy: np.ndarray) -> np.ndarray:
        return self.renormalize(t, self.source.lifted(t, np.asarray(xy, dtype=float)))


def newton_inverse(forward: PointMap, target: np.ndarray, tol: float,
                   max_iter: int = 60) -> np.ndarray:
    """Solve forward(w) = target by damped Newton with a finite-difference Jacobian.

    Raises:
        InversionDiverged: If the residual stays above tol
    """
    target = np.asarray(target, dtype=float)
    flat = target.reshape(-1, 2)
    w = flat - (forward(flat) - flat)
    h = 1e-6
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    for iteration in range(max_iter):
        residual = forward(w) - flat
        err = np.linalg.norm(residual, axis=1)
        if np.all(err <= tol):
            logger.debug("Newton inversion converged after %d iterations", iteration)
            return w.reshape(target.shape)
        jac = np.empty(w.shape[:1] + (2, 2))
        jac[:, :, 0] = (forward(w + ex) - forward(w - ex)) / (2 * h)
        jac[:, :, 1] = (forward(w + ey) - forward(w - ey)) / (2 * h)
        step = np.linalg.solve(jac, residual[..., None])[..., 0]
        # halve the step where it does not decrease the residual
        candidate = w - step
        new_err = np.linalg.norm(forward(candidate) - flat, axis=1)
        worse = new_err > err
        if np.any(worse):
            candidate[worse] = w[worse] - 0.5 * step[worse]
        w = candidate
    residual = np.linalg.norm(forward(w) - flat, axis=1)
    if np.all(residual <= tol):
        return w.reshape(target.shape)
    raise InversionDiverged(f"Newton inversion residual {residual.max():.3e} above {tol:.1e}")


def compose(first: IsotopySpec, second: IsotopySpec) -> IsotopySpec:
    """Concatenation `second . first`: run first on [0, 1/2], then second.

    The time-one map is F_{second} o F_{first}.
    """
    def lifted(t, xy):
        if t <= 0.5:
            return first.lifted(2 * t, xy)
        return second.lifted(2 * t - 1, first.lifted(1.0, xy))

    inverse_one = None
    if first.inverse_one is not None and second.inverse_one is not None:
        inverse_one = lambda xy: first.inverse_one(second.inverse_one(xy))
    return IsotopySpec(
        name=f"{second.name}*{first.name}",
        lifted=lifted,
        L=first.L,
        smoothness=_weakest(first.smoothness, second.smoothness),
        inverse_one=inverse_one,
        segments=first.segments + second.segments,
        family="compose",
        params={'first': first.describe(), 'second': second.describe()},
    )


def compose_pointwise(first: IsotopySpec, second: IsotopySpec) -> IsotopySpec:
    """Pointwise product (F_{second,t} o F_{first,t}).

    Homotopic with fixed extremities to `compose(first, second)`.
    """
    def lifted(t, xy):
        return second.lifted(t, first.lifted(t, xy))

    inverse_one = None
    if first.inverse_one is not None and second.inverse_one is not None:
        inverse_one = lambda xy: first.inverse_one(second.inverse_one(xy))
    return IsotopySpec(
        name=f"{second.name}.{first.name}",
        lifted=lifted,
        L=first.L,
        smoothness=_weakest(first.smoothness, second.smoothness),
        inverse_one=inverse_one,
        segments=max(first.segments, second.segments),
        family="compose_pointwise",
        params={'first': first.describe(), 'second': second.describe()},
    )


def inverse(isotopy: IsotopySpec, tol: float = 1e-12) -> IsotopySpec:
    """Inverse isotopy (F_{1-t} o F_1^{-1})."""
    def lifted(t, xy):
        return isotopy.lifted(1.0 - t, isotopy.time_one_inverse(xy, tol))

    return IsotopySpec(
        name=f"inverse({isotopy.name})",
        lifted=lifted,
        L=isotopy.L,
        smoothness=isotopy.smoothness,
        inverse_one=isotopy.time_one,
        segments=isotopy.segments,
        family="inverse",
        params={'of': isotopy.describe()},
        hamiltonian=_scaled(isotopy.hamiltonian, -1),
    )


def power(isotopy: IsotopySpec, q: int) -> IsotopySpec:
    """Isotopy I^q: the trajectories of F^k(z), k < q, concatenated."""
    if q < 1:
        raise ValueError(f"Power must be a positive integer, got {q}")
    if q == 1:
        return isotopy

    def lifted(t, xy):
        k = min(int(math.floor(q * t)), q - 1)
        return isotopy.lifted(q * t - k, isotopy.iterate(xy, k))

    def inverse_one(xy):
        out = np.asarray(xy, dtype=float)
        for _ in range(q):
            out = isotopy.time_one_inverse(out)
        return out

    return IsotopySpec(
        name=f"{isotopy.name}^{q}",
        lifted=lifted,
        L=isotopy.L,
        smoothness=isotopy.smoothness,
        inverse_one=inverse_one,
        segments=q * isotopy.segments,
        family="power",
        params={'of': isotopy.describe(), 'q': q},
        hamiltonian=_scaled(isotopy.hamiltonian, q),
    )


def conjugate(isotopy: IsotopySpec, by: IsotopySpec) -> IsotopySpec:
    """Conjugate isotopy h o F_t o h^{-1}, h the time-one map of `by`."""
    def lifted(t, xy):
        return by.time_one(isotopy.lifted(t, by.time_one_inverse(xy)))

    def inverse_one(xy):
        return by.time_one(isotopy.time_one_inverse(by.time_one_inverse(xy)))

    return IsotopySpec(
        name=f"{by.name}|{isotopy.name}",
        lifted=lifted,
        L=isotopy.L,
        smoothness=_weakest(isotopy.smoothness, by.smoothness),
        inverse_one=inverse_one,
        segments=isotopy.segments,
        family="conjugate",
        params={'of': isotopy.describe(), 'by': by.describe()},
    )


def normalize_fixing_two(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint,
                         tol: Optional[Tolerances] = None) -> PlaneIsotopy:
    """Plane isotopy from Id to F~ fixing the two fixed lifts a and b.

    In complex notation, w -> (b - a) / (F~_t(b) - F~_t(a)) * (F~_t(w) - F~_t(a)) + a.

    Raises:
        NotFixed: If a or b is not fixed by F~
        DegenerateDenominator: If F~_t(a) and F~_t(b) come within the
            clearance of each other
    """
    tol = tol or Tolerances()
    pts = np.stack([a.as_array(), b.as_array()])
    for label, p in zip(('a', 'b'), pts):
        residual = float(np.linalg.norm(isotopy.time_one(p) - p))
        if residual >= tol.fixed:
            raise NotFixed(f"Lift {label}=({p[0]:.6g}, {p[1]:.6g}) moves by {residual:.3e} under F~")
    if np.linalg.norm(pts[1] - pts[0]) < tol.geom:
        raise DegenerateDenominator("Normalization needs two distinct fixed lifts")

    times = sample_times(isotopy.segments, tol.trajectory_steps)
    static = all(np.array_equal(isotopy.lifted(float(t), pts), pts) for t in times)
    plane = PlaneIsotopy(isotopy, complex(a.x, a.y), complex(b.x, b.y), static, tol.geom)
    if not static:
        for t in times:
            plane.frame(float(t))
    return plane


def sample_times(segments: int, steps: int) -> np.ndarray:
    """Uniform sampling times on [0, 1], `steps` per unit segment."""
    return np.linspace(0.0, 1.0, steps * segments + 1)


def sample_trajectories(isotopy, xy: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Trajectories of many points: (N, 2) starts -> (N, S, 2) samples."""
    xy = np.asarray(xy, dtype=float)
    return np.stack([isotopy.lifted(float(t), xy) for t in times], axis=-2)


def trajectory(isotopy, start: PlanePoint, steps: int = 64,
               tol: Optional[Tolerances] = None) -> PlanePath:
    """Sampled lifted trajectory t -> F~_t(start), refinable on demand.

    A static point yields a degenerate one-vertex path.
    """
    if steps < 2:
        raise ValueError(f"Trajectory needs at least 2 steps, got {steps}")
    tol = tol or Tolerances()
    origin = start.as_array()
    times = sample_times(isotopy.segments, steps)
    vertices = sample_trajectories(isotopy, origin, times)
    if np.max(np.linalg.norm(vertices - vertices[0], axis=1)) <= tol.geom:
        return PlanePath.point(vertices[0])

    def curve(ts):
        return np.stack([isotopy.lifted(float(t), origin) for t in np.atleast_1d(ts)])

    return PlanePath(vertices, curve=curve, times=times)


def equivariance_error(isotopy: IsotopySpec, grid_n: int = 8,
                       times=(0.0, 0.25, 0.5, 1.0)) -> float:
    """Largest deviation from deck equivariance and from Id at t=0 on a grid."""
    L = isotopy.L
    axis = (np.arange(grid_n) + 0.5) * L / grid_n
    xy = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
    worst = float(np.max(np.abs(isotopy.lifted(0.0, xy) - xy)))
    for shift in (np.array([L, 0.0]), np.array([-L, 2 * L])):
        for t in times:
            lhs = isotopy.lifted(t, xy + shift)
            rhs = isotopy.lifted(t, xy) + shift
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def displacement_minimum(isotopy: IsotopySpec, grid_n: int = 64) -> float:
    """Minimum of |F~(z) - z| over an n x n grid of the fundamental domain."""
    L = isotopy.L
    axis = np.arange(grid_n) * L / grid_n
    xy = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
    return float(np.min(np.linalg.norm(isotopy.time_one(xy) - xy, axis=1)))


def _scaled(hamiltonian, factor):
    if hamiltonian is None:
        return None
    return lambda xy: factor * hamiltonian(xy)


_SMOOTHNESS_ORDER = ["C0", "lipschitz", "smooth"]


def _weakest(first: str, second: str) -> str:
    ranks = [_SMOOTHNESS_ORDER.index(s) if s in _SMOOTHNESS_ORDER else 0 for s in (first, second)]
    return _SMOOTHNESS_ORDER[min(ranks)]
