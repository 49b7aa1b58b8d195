"""Flat torus M = R^2/(LZ)^2, its universal cover and deck group."""
import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

DEFAULT_MODULUS = 4.0


def _reduce(value: float, modulus: float) -> float:
    """Reduce a coordinate into [0, modulus)."""
    reduced = math.fmod(value, modulus)
    if reduced < 0:
        reduced += modulus
    # fmod of a tiny negative can round up to the modulus itself
    if reduced >= modulus:
        reduced = 0.0
    return reduced


@dataclass(frozen=True)
class TorusPoint:
    """Point of the torus, coordinates reduced mod L."""
    x: float
    y: float
    L: float = DEFAULT_MODULUS

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"Torus modulus must be positive, got {self.L}")
        object.__setattr__(self, 'x', _reduce(float(self.x), self.L))
        object.__setattr__(self, 'y', _reduce(float(self.y), self.L))

    def as_array(self) -> np.ndarray:
        """Coordinates as a length-2 array."""
        return np.array([self.x, self.y])

    def distance(self, other: 'TorusPoint') -> float:
        """Flat torus distance."""
        return float(np.linalg.norm(torus_delta(other.as_array() - self.as_array(), self.L)))


@dataclass(frozen=True)
class PlanePoint:
    """Point of the universal cover."""
    x: float
    y: float

    @classmethod
    def from_array(cls, xy) -> 'PlanePoint':
        """Create PlanePoint from any length-2 sequence."""
        return cls(float(xy[0]), float(xy[1]))

    def as_array(self) -> np.ndarray:
        """Coordinates as a length-2 array."""
        return np.array([self.x, self.y])

    def __add__(self, other: 'PlanePoint') -> 'PlanePoint':
        return PlanePoint(self.x + other.x, self.y + other.y)

    def __sub__(self, other: 'PlanePoint') -> 'PlanePoint':
        return PlanePoint(self.x - other.x, self.y - other.y)

    def norm(self) -> float:
        """Euclidean norm."""
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class DeckElement:
    """Deck translation (x, y) -> (x + mL, y + nL)."""
    m: int
    n: int

    def __add__(self, other: 'DeckElement') -> 'DeckElement':
        return DeckElement(self.m + other.m, self.n + other.n)

    def __neg__(self) -> 'DeckElement':
        return DeckElement(-self.m, -self.n)

    def vector(self, L: float) -> np.ndarray:
        """Translation vector in plane coordinates."""
        return np.array([self.m * L, self.n * L])

    def act(self, p: PlanePoint, L: float) -> PlanePoint:
        """Translate a plane point."""
        return PlanePoint(p.x + self.m * L, p.y + self.n * L)

    @property
    def radius(self) -> int:
        """Chebyshev radius, i.e. the shell the element belongs to."""
        return max(abs(self.m), abs(self.n))


IDENTITY = DeckElement(0, 0)


def shell(radius: int) -> Iterator[DeckElement]:
    """Deck elements with Chebyshev radius exactly `radius`, row-major."""
    if radius == 0:
        yield IDENTITY
        return
    for m in range(-radius, radius + 1):
        for n in range(-radius, radius + 1):
            if max(abs(m), abs(n)) == radius:
                yield DeckElement(m, n)


def torus_delta(delta: np.ndarray, L: float) -> np.ndarray:
    """Reduce displacement vectors to the representative in [-L/2, L/2)."""
    return delta - L * np.floor(delta / L + 0.5)


def wrap(xy: np.ndarray, L: float) -> np.ndarray:
    """Project plane coordinates (..., 2) onto [0, L)^2."""
    reduced = np.mod(xy, L)
    return np.where(reduced >= L, 0.0, reduced)


def project(p: PlanePoint, L: float = DEFAULT_MODULUS) -> TorusPoint:
    """Covering map pi from the plane to the torus.

    Args:
        p: Plane point
        L: Torus modulus

    Returns:
        Torus point with coordinates reduced mod L
    """
    return TorusPoint(p.x, p.y, L)


def lift_near(z: TorusPoint, ref: PlanePoint) -> PlanePoint:
    """Lift of z in the fundamental cell centered at ref.

    Ties between two equidistant lifts (ref exactly half a period away)
    resolve to the candidate with the larger coordinate, x first then y.

    Args:
        z: Torus point
        ref: Reference plane point

    Returns:
        Plane point projecting to z within L*sqrt(2)/2 of ref
    """
    L = z.L
    k = math.floor((ref.x - z.x) / L + 0.5)
    l = math.floor((ref.y - z.y) / L + 0.5)
    return PlanePoint(z.x + k * L, z.y + l * L)


def lift_near_array(z: np.ndarray, ref: np.ndarray, L: float) -> np.ndarray:
    """Vectorized lift_near on (..., 2) arrays."""
    return z + L * np.floor((ref - z) / L + 0.5)


def deck_between(start: np.ndarray, end: np.ndarray, L: float) -> Tuple[int, int]:
    """Deck element carrying start to the lift of the same point near end.

    Both arguments must be lifts of points that agree on the torus up to
    a displacement much smaller than L.
    """
    shift = np.round((np.asarray(end) - np.asarray(start)) / L)
    return int(shift[0]), int(shift[1])
