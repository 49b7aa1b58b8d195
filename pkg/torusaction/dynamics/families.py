"""Built-in isotopy families."""
import logging
import math
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate

from torusaction.dynamics.isotopy import IsotopySpec
from torusaction.exceptions import ConfigError
from torusaction.geometry.cover import DEFAULT_MODULUS, TorusPoint, torus_delta

logger = logging.getLogger(__name__)

TWIST_RADIUS = 1.0

RadialProfile = Callable[[np.ndarray], np.ndarray]


def linear_profile(r: np.ndarray) -> np.ndarray:
    """beta(r) = r inside the unit disk, 0 outside."""
    r = np.asarray(r, dtype=float)
    return np.where(r < TWIST_RADIUS, r, 0.0)


def plateau_profile(r: np.ndarray) -> np.ndarray:
    """beta = 1 on r <= 1/2, linear down to 0 at r = 1."""
    r = np.asarray(r, dtype=float)
    return np.where(r <= 0.5, 1.0, np.where(r < TWIST_RADIUS, 2.0 * (1.0 - r), 0.0))


PROFILES = {
    'linear': linear_profile,
    'plateau': plateau_profile,
}


def _resolve_profile(profile: Union[str, RadialProfile]):
    if callable(profile):
        return 'custom', profile
    if profile not in PROFILES:
        raise ConfigError(f"Unknown twist profile: {profile}")
    return profile, PROFILES[profile]


def make_twist(center: TorusPoint, profile: Union[str, RadialProfile] = 'linear') -> IsotopySpec:
    """Twist of the unit disk about center: F_t(r, theta) = (r, theta + 2*pi*beta(r)*t).

    Args:
        center: Center of the twisted disk
        profile: 'linear', 'plateau' or a radial callable vanishing for r >= 1

    Returns:
        Disk-supported area-preserving isotopy

    Raises:
        ConfigError: If the disk does not embed in the torus or the profile
            does not vanish outside it
    """
    L = center.L
    name, beta = _resolve_profile(profile)
    if TWIST_RADIUS >= L / 2:
        raise ConfigError(f"Unit disk does not embed in the torus of modulus {L}")
    outside = np.linspace(TWIST_RADIUS, L / 2, 64)
    if np.any(np.asarray(beta(outside), dtype=float) != 0):
        raise ConfigError("Twist profile must vanish for r >= 1")

    c = center.as_array()

    def rotate(t, xy):
        xy = np.asarray(xy, dtype=float)
        d = torus_delta(xy - c, L)
        r = np.hypot(d[..., 0], d[..., 1])
        phi = 2 * np.pi * t * np.asarray(beta(r), dtype=float)
        cos, sin = np.cos(phi), np.sin(phi)
        rotated = np.stack([cos * d[..., 0] - sin * d[..., 1],
                            sin * d[..., 0] + cos * d[..., 1]], axis=-1)
        return xy + (rotated - d)

    return IsotopySpec(
        name=f"twist[{name}]",
        lifted=rotate,
        L=L,
        smoothness='lipschitz' if name == 'plateau' else 'C0',
        inverse_one=lambda xy: rotate(-1.0, xy),
        family='twist',
        params={'center': [center.x, center.y], 'profile': name},
        hamiltonian=_radial_hamiltonian(name, beta, c, L),
    )


def make_shear(L: float = DEFAULT_MODULUS) -> IsotopySpec:
    """Smooth isotopy (x + (tL/10) cos(2 pi y/L), y + (tL/10) sin(2 pi y/L)).

    Every point moves by exactly L/10, so the time-one map has no fixed point.
    """
    k = 2 * np.pi / L

    def shear(t, xy):
        xy = np.asarray(xy, dtype=float)
        y = xy[..., 1]
        step = t * L / 10
        return np.stack([xy[..., 0] + step * np.cos(k * y),
                         y + step * np.sin(k * y)], axis=-1)

    return IsotopySpec(name='shear', lifted=shear, L=L, family='shear', params={})


def make_rigid_rotation(v: Sequence[float], L: float = DEFAULT_MODULUS) -> IsotopySpec:
    """Translation isotopy F_t(z) = z + t v."""
    vector = np.asarray(v, dtype=float).reshape(2)

    def translate(t, xy):
        return np.asarray(xy, dtype=float) + t * vector

    return IsotopySpec(
        name=f"rigid({vector[0]:g},{vector[1]:g})",
        lifted=translate,
        L=L,
        inverse_one=lambda xy: np.asarray(xy, dtype=float) - vector,
        family='rigid',
        params={'v': vector.tolist()},
    )


def make_identity(L: float = DEFAULT_MODULUS) -> IsotopySpec:
    """Constant isotopy."""
    def constant(t, xy):
        return np.array(xy, dtype=float)

    return IsotopySpec(name='identity', lifted=constant, L=L,
                       inverse_one=lambda xy: np.array(xy, dtype=float),
                       family='identity', params={},
                       hamiltonian=lambda xy: np.zeros(np.shape(xy)[:-1]))


def make_slide(amplitude: float, L: float = DEFAULT_MODULUS) -> IsotopySpec:
    """Area-preserving horizontal slide (x + t A sin(2 pi y/L), y)."""
    k = 2 * np.pi / L

    def slide(t, xy):
        xy = np.asarray(xy, dtype=float)
        return np.stack([xy[..., 0] + t * amplitude * np.sin(k * xy[..., 1]),
                         xy[..., 1]], axis=-1)

    return IsotopySpec(
        name=f"slide({amplitude:g})",
        lifted=slide,
        L=L,
        inverse_one=lambda xy: slide(-1.0, xy),
        family='slide',
        params={'amplitude': amplitude},
    )


def twist_hamiltonian(beta: RadialProfile, r: float) -> float:
    """H(r) = -integral_r^1 2 pi beta(s) s ds, so that dH = -i_X omega and H = 0 off the disk."""
    if r >= TWIST_RADIUS:
        return 0.0
    breaks = [0.5] if r < 0.5 else None
    value, _ = integrate.quad(lambda s: 2 * math.pi * float(beta(np.array(s))) * s, r, TWIST_RADIUS,
                              points=breaks, epsabs=1e-13, epsrel=1e-12)
    return -value


def _radial_hamiltonian(name: str, beta: RadialProfile, center: np.ndarray, L: float):
    """Vectorized H(z) = H(r(z)) for a twist profile."""
    if name == 'linear':
        def radial(r):
            return np.where(r < TWIST_RADIUS, (2 * np.pi / 3) * (r ** 3 - 1), 0.0)
    else:
        radial = np.vectorize(lambda r: twist_hamiltonian(beta, float(r)), otypes=[float])

    def hamiltonian(xy):
        d = torus_delta(np.asarray(xy, dtype=float) - center, L)
        return radial(np.hypot(d[..., 0], d[..., 1]))

    return hamiltonian
