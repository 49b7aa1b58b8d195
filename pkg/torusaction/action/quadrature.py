"""Grid and atomic integration of the crossing density and of the displacement.

The crossing density of a point z with respect to two fixed lifts a, b
is the signed number of crossings of the transversal a -> b by the
normalized one-step trajectories of all lifts of z. Integrated against
an invariant measure it gives the action difference, because its
Birkhoff averages are the recurrent linking numbers.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from torusaction.action.measures import Measure
from torusaction.dynamics.isotopy import (
    IsotopySpec,
    PlaneIsotopy,
    normalize_fixing_two,
    sample_times,
    sample_trajectories,
)
from torusaction.exceptions import DegenerateIncidence, QuadratureError
from torusaction.geometry.cover import PlanePoint
from torusaction.geometry.paths import crossing_counts, jittered_transversal
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

CHUNK = 16384

Pair = Tuple[PlanePoint, PlanePoint]


@dataclass
class QuadratureResult:
    """Integral at the requested resolution with its Richardson error bar."""
    value: float
    error: float
    n: int
    coarse: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'value': self.value, 'error': self.error, 'n': self.n, 'coarse': self.coarse}


@dataclass
class _PairFrame:
    """Normalized plane isotopy of one pair, sampled on the quadrature times."""
    plane: PlaneIsotopy
    a: np.ndarray
    b: np.ndarray
    multipliers: Optional[np.ndarray] = None
    anchors: Optional[np.ndarray] = None


def _pair_frames(isotopy: IsotopySpec, pairs: Sequence[Pair], times: np.ndarray,
                 tol: Tolerances) -> List[_PairFrame]:
    frames = []
    for a, b in pairs:
        plane = normalize_fixing_two(isotopy, a, b, tol)
        frame = _PairFrame(plane, a.as_array(), b.as_array())
        if not plane.static:
            sampled = [plane.frame(float(t)) for t in times]
            frame.multipliers = np.array([m for m, _ in sampled])
            frame.anchors = np.array([za for _, za in sampled])
        frames.append(frame)
    return frames


def _normalized(frame: _PairFrame, raw: np.ndarray) -> np.ndarray:
    """Normalized trajectories m_t (F~_t(w) - F~_t(a)) + a from raw samples (N, S, 2)."""
    z = raw[..., 0] + 1j * raw[..., 1]
    w = frame.multipliers[None, :] * (z - frame.anchors[None, :]) + complex(frame.a[0], frame.a[1])
    return np.stack([w.real, w.imag], axis=-1)


def _deck_offsets(frame: _PairFrame, alpha: Tuple[int, int], L: float) -> np.ndarray:
    """Displacement of the normalized trajectory of a deck translate: (2,) or (S, 2)."""
    v = np.array(alpha, dtype=float) * L
    if frame.plane.static:
        return v
    shift = frame.multipliers * complex(v[0], v[1])
    return np.stack([shift.real, shift.imag], axis=-1)


def _deck_range(frame: _PairFrame, lo: np.ndarray, hi: np.ndarray, tlo: np.ndarray,
                thi: np.ndarray, L: float, cap: int) -> List[Tuple[int, int]]:
    """Deck elements whose translates can meet the transversal box."""
    if frame.plane.static:
        first = np.ceil((tlo - hi) / L).astype(int)
        last = np.floor((thi - lo) / L).astype(int)
    else:
        reach = np.linalg.norm(np.maximum(np.abs(hi - tlo), np.abs(thi - lo)))
        smallest = float(np.min(np.abs(frame.multipliers)))
        k = int(math.ceil(reach / (smallest * L)))
        first, last = np.array([-k, -k]), np.array([k, k])
    if np.max(np.maximum(np.abs(first), np.abs(last))) > cap:
        raise QuadratureError(f"Deck window exceeds the shell cap {cap}")
    return [(m, n) for m in range(first[0], last[0] + 1) for n in range(first[1], last[1] + 1)]


def _translate_counts(frame: _PairFrame, paths: np.ndarray, transversal: np.ndarray,
                      L: float, tol: Tolerances) -> Tuple[np.ndarray, np.ndarray]:
    """Crossings summed over all deck translates of each path."""
    counts = np.zeros(len(paths), dtype=np.int64)
    bad = np.zeros(len(paths), dtype=bool)
    if not len(paths):
        return counts, bad
    lo, hi = paths.min(axis=1), paths.max(axis=1)
    tlo, thi = transversal.min(axis=0), transversal.max(axis=0)
    for alpha in _deck_range(frame, lo.min(axis=0), hi.max(axis=0), tlo, thi, L, tol.shell_cap):
        offset = _deck_offsets(frame, alpha, L)
        olo = offset if offset.ndim == 1 else offset.min(axis=0)
        ohi = offset if offset.ndim == 1 else offset.max(axis=0)
        mask = np.all(lo + olo <= thi, axis=1) & np.all(hi + ohi >= tlo, axis=1)
        if not np.any(mask):
            continue
        c, d = crossing_counts(transversal, paths[mask] + offset)
        counts[mask] += c
        bad[mask] |= d
    return counts, bad


def _density_counts(frame: _PairFrame, raw: np.ndarray, L: float, seed: int,
                    tol: Tolerances) -> np.ndarray:
    """Crossing density of each sampled point, jittering the transversal where it is touched."""
    paths = raw if frame.plane.static else _normalized(frame, raw)
    moving = np.flatnonzero(np.any(paths != paths[:, :1, :], axis=(1, 2)))
    counts = np.zeros(len(raw), dtype=np.int64)
    pending = moving
    for attempt in range(tol.jitter_attempts + 1):
        transversal = jittered_transversal(frame.a, frame.b, L, seed, attempt, tol.jitter_scale)
        c, bad = _translate_counts(frame, paths[pending], transversal, L, tol)
        counts[pending] = c
        pending = pending[bad]
        if not len(pending):
            return counts
        logger.warning("Degenerate incidence for %d samples, retry %d", len(pending), attempt + 1)
    raise DegenerateIncidence(
        f"{len(pending)} samples still touch the transversal after {tol.jitter_attempts} attempts"
    )


def _chunked(xy: np.ndarray, weights: np.ndarray, work: Callable[[np.ndarray, np.ndarray], np.ndarray],
             threads: int) -> np.ndarray:
    """Apply work to fixed-size chunks and add the partial sums in chunk order."""
    starts = range(0, len(xy), CHUNK)

    def run(start):
        return work(xy[start:start + CHUNK], weights[start:start + CHUNK])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        partials = list(executor.map(run, starts))
    if not partials:
        return np.zeros(0)
    stacked = np.array(partials)
    return np.array([math.fsum(stacked[:, k]) for k in range(stacked.shape[1])])


def density_integrals(isotopy: IsotopySpec, measure: Measure, pairs: Sequence[Pair], n: int,
                      tol: Optional[Tolerances] = None, threads: int = 1, seed: int = 0) -> np.ndarray:
    """Integrals of the crossing density of every pair, sharing trajectories across pairs.

    Args:
        isotopy: Isotopy whose time-one map preserves the measure
        measure: Atomic or grid measure
        pairs: Fixed lift pairs (a, b)
        n: Grid size for grid measures, ignored for atomic ones
        tol: Tolerances (quad_steps, subsamples, jitter)
        threads: Worker threads
        seed: Seed of the transversal jitter

    Returns:
        One integral per pair
    """
    tol = tol or Tolerances()
    L = isotopy.L
    times = sample_times(isotopy.segments, tol.quad_steps)
    frames = _pair_frames(isotopy, pairs, times, tol)
    xy, weights = measure.cell_samples(n, tol.subsamples)

    def work(chunk, w):
        raw = sample_trajectories(isotopy, chunk, times)
        out = np.empty(len(frames))
        for k, frame in enumerate(frames):
            counts = _density_counts(frame, raw, L, seed, tol)
            hit = counts != 0
            out[k] = math.fsum(w[hit] * counts[hit])
        return out

    values = _chunked(xy, weights, work, threads)
    logger.debug("Crossing density on %d samples for %d pairs", len(xy), len(frames))
    return values if len(values) else np.zeros(len(frames))


def crossing_density(isotopy: IsotopySpec, a: PlanePoint, b: PlanePoint, xy: np.ndarray,
                     tol: Optional[Tolerances] = None, seed: int = 0) -> np.ndarray:
    """Integer crossing density at each point of xy (N, 2)."""
    tol = tol or Tolerances()
    times = sample_times(isotopy.segments, tol.quad_steps)
    frame = _pair_frames(isotopy, [(a, b)], times, tol)[0]
    raw = sample_trajectories(isotopy, np.asarray(xy, dtype=float).reshape(-1, 2), times)
    return _density_counts(frame, raw, isotopy.L, seed, tol)


def displacement_integral(isotopy: IsotopySpec, measure: Measure, n: int,
                          tol: Optional[Tolerances] = None, threads: int = 1) -> np.ndarray:
    """Integral of F~(z) - z against the measure."""
    tol = tol or Tolerances()
    xy, weights = measure.cell_samples(n, tol.subsamples)

    def work(chunk, w):
        step = isotopy.time_one(chunk) - chunk
        return np.array([math.fsum(w * step[:, 0]), math.fsum(w * step[:, 1])])

    values = _chunked(xy, weights, work, threads)
    return values if len(values) else np.zeros(2)


def richardson(evaluate: Callable[[int], np.ndarray], n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate at n and n/2; returns (fine values, coarse values).

    Raises:
        QuadratureError: If n is not an even grid of at least 4
    """
    if n < 4 or n % 2:
        raise QuadratureError(f"Grid size must be even and at least 4, got {n}")
    fine = np.asarray(evaluate(n), dtype=float)
    coarse = np.asarray(evaluate(n // 2), dtype=float)
    logger.info("Quadrature n=%d: max change %.3e against n=%d",
                n, float(np.max(np.abs(fine - coarse))) if fine.size else 0.0, n // 2)
    return fine, coarse
