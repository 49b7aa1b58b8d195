"""Finite invariant measures on the torus: weighted atoms or grid densities."""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from torusaction.dynamics.isotopy import IsotopySpec
from torusaction.exceptions import MeasureError
from torusaction.geometry.cover import DEFAULT_MODULUS, TorusPoint, torus_delta, wrap
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

ATOMIC = 'atomic'
GRID = 'grid'

Density = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Measure:
    """Finite Borel measure, atomic or given by a density against area.

    Grid measures are integrated on n x n cell grids chosen at
    quadrature time; `invariant` flags measures known to be invariant
    by construction.
    """
    kind: str
    L: float = DEFAULT_MODULUS
    points: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    density: Optional[Density] = None
    exact_mass: Optional[float] = None
    full_support: bool = False
    invariant: bool = False
    label: str = ''
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == ATOMIC:
            if self.points is None or len(self.points) == 0:
                raise MeasureError("Atomic measure needs at least one atom")
            points = wrap(np.asarray(self.points, dtype=float).reshape(-1, 2), self.L)
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if len(weights) != len(points):
                raise MeasureError(f"{len(points)} atoms but {len(weights)} weights")
            if np.any(weights < 0):
                raise MeasureError("Atom weights must be non-negative")
            if math.fsum(weights) <= 0:
                raise MeasureError("Measure must have positive total mass")
            object.__setattr__(self, 'points', points)
            object.__setattr__(self, 'weights', weights)
        elif self.kind == GRID:
            if self.density is None:
                raise MeasureError("Grid measure needs a density")
        else:
            raise MeasureError(f"Unknown measure kind: {self.kind}")

    @classmethod
    def atomic(cls, points: Sequence[Sequence[float]], weights: Optional[Sequence[float]] = None,
               L: float = DEFAULT_MODULUS, label: str = 'atomic') -> 'Measure':
        """Weighted atoms; equal weights summing to 1 by default."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if weights is None:
            weights = np.full(len(points), 1.0 / max(len(points), 1))
        return cls(ATOMIC, L, points=points, weights=np.asarray(weights, dtype=float), label=label)

    @classmethod
    def lebesgue(cls, L: float = DEFAULT_MODULUS) -> 'Measure':
        """Area measure dx dy, total mass L^2."""
        return cls(GRID, L, density=lambda xy: np.ones(np.shape(xy)[:-1]), exact_mass=L * L,
                   full_support=True, invariant=True, label='lebesgue')

    @classmethod
    def disk_lebesgue(cls, center: TorusPoint, radius: float) -> 'Measure':
        """Area measure restricted to a round disk."""
        L = center.L
        if not 0 < radius < L / 2:
            raise MeasureError(f"Disk radius must lie in (0, L/2), got {radius}")
        c = center.as_array()

        def density(xy):
            d = torus_delta(np.asarray(xy, dtype=float) - c, L)
            return (np.hypot(d[..., 0], d[..., 1]) < radius).astype(float)

        return cls(GRID, L, density=density, exact_mass=math.pi * radius ** 2, label='disk-lebesgue',
                   params={'center': [center.x, center.y], 'radius': radius})

    @classmethod
    def periodic_orbit(cls, isotopy: IsotopySpec, start: TorusPoint, mass: float = 1.0,
                       tol: Optional[Tolerances] = None, cap: int = 100_000) -> 'Measure':
        """Equal atoms on the periodic orbit of start, of given total mass."""
        tol = tol or Tolerances()
        L = isotopy.L
        origin = start.as_array()
        orbit = [origin]
        w = origin
        for _ in range(cap):
            w = isotopy.time_one(w)
            if np.linalg.norm(torus_delta(w - origin, L)) < tol.fixed:
                break
            orbit.append(w)
        else:
            raise MeasureError(f"({start.x:.6g}, {start.y:.6g}) is not periodic within {cap} iterates")
        weights = np.full(len(orbit), mass / len(orbit))
        return cls(ATOMIC, L, points=np.array(orbit), weights=weights, label='periodic-orbit')

    @property
    def is_atomic(self) -> bool:
        return self.kind == ATOMIC

    def total_mass(self) -> float:
        """Total mass; grid measures without a closed form use a 512 grid."""
        if self.is_atomic:
            return math.fsum(self.weights)
        if self.exact_mass is not None:
            return self.exact_mass
        _, weights = self.cell_samples(512, 1)
        return math.fsum(weights)

    def cell_samples(self, n: int, subsamples: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """Sub-cell centers of an n x n grid and their weights density * area.

        Points of zero weight are dropped.
        """
        if self.is_atomic:
            return self.points, self.weights
        m = n * subsamples
        h = self.L / m
        axis = (np.arange(m) + 0.5) * h
        xy = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
        weights = np.asarray(self.density(xy), dtype=float) * (h * h)
        keep = weights > 0
        return xy[keep], weights[keep]

    def check_invariance(self, isotopy: IsotopySpec, tol: Optional[Tolerances] = None,
                         grid_n: int = 32) -> float:
        """Check that F preserves the measure.

        Atoms must be permuted with equal weights. Grid measures must have
        an area-preserving time-one map that preserves the density.

        Returns:
            Largest mismatch found

        Raises:
            MeasureError: If the measure is not invariant
        """
        tol = tol or Tolerances()
        if self.is_atomic:
            images = wrap(isotopy.time_one(self.points), self.L)
            dist, idx = cKDTree(self.points, boxsize=self.L).query(images)
            mismatch = float(dist.max())
            if mismatch > tol.fixed:
                raise MeasureError(f"Atoms are not mapped to atoms (gap {mismatch:.3e})")
            if len(set(idx.tolist())) != len(idx):
                raise MeasureError("Time-one map does not permute the atoms")
            weight_gap = float(np.max(np.abs(self.weights[idx] - self.weights)))
            if weight_gap > tol.fixed:
                raise MeasureError(f"Atom weights not preserved (gap {weight_gap:.3e})")
            return max(mismatch, weight_gap)

        h = 1e-6
        axis = (np.arange(grid_n) + 0.5) * self.L / grid_n
        xy = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
        dx = (isotopy.time_one(xy + [h, 0]) - isotopy.time_one(xy - [h, 0])) / (2 * h)
        dy = (isotopy.time_one(xy + [0, h]) - isotopy.time_one(xy - [0, h])) / (2 * h)
        det = dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0]
        area_gap = float(np.max(np.abs(det - 1)))
        density_gap = float(np.max(np.abs(self.density(isotopy.time_one(xy)) - self.density(xy))))
        if area_gap > 1e-5:
            raise MeasureError(f"Time-one map is not area preserving (|det - 1| up to {area_gap:.3e})")
        if density_gap > 1e-9:
            raise MeasureError(f"Density not preserved by the time-one map (gap {density_gap:.3e})")
        return area_gap

    def check_atoms_off_fixed(self, isotopy: IsotopySpec, tol: Optional[Tolerances] = None) -> None:
        """Reject atoms sitting on contractible fixed points."""
        if not self.is_atomic:
            return
        tol = tol or Tolerances()
        residual = np.linalg.norm(isotopy.time_one(self.points) - self.points, axis=1)
        on_fixed = np.flatnonzero(residual < tol.fixed)
        if len(on_fixed):
            raise MeasureError(f"{len(on_fixed)} atoms lie on contractible fixed points")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        data = {'kind': self.kind, 'label': self.label, 'full_support': self.full_support}
        if self.is_atomic:
            data['atoms'] = len(self.points)
            data['mass'] = self.total_mass()
        else:
            data['mass'] = self.exact_mass
            data.update(self.params)
        return data
