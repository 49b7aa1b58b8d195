"""Tests for isotopies, their operations and the built-in families."""
import math

import numpy as np
import pytest

from torusaction.dynamics.families import (
    make_identity,
    make_rigid_rotation,
    make_shear,
    make_slide,
    make_twist,
    plateau_profile,
    twist_hamiltonian,
)
from torusaction.dynamics.isotopy import (
    compose,
    compose_pointwise,
    conjugate,
    displacement_minimum,
    equivariance_error,
    inverse,
    newton_inverse,
    normalize_fixing_two,
    power,
    sample_times,
    trajectory,
)
from torusaction.exceptions import ConfigError, NotFixed
from torusaction.geometry.cover import PlanePoint, TorusPoint

CENTER = TorusPoint(2.0, 2.0)


@pytest.fixture
def grid_points():
    """Points spread over the fundamental domain."""
    rng = np.random.default_rng(5)
    return rng.uniform(0, 4, size=(64, 2))


@pytest.mark.parametrize("isotopy", [
    make_twist(CENTER),
    make_twist(CENTER, 'plateau'),
    make_shear(),
    make_rigid_rotation([0.3, 0.1]),
    make_slide(0.3),
    make_identity(),
])
def test_families_are_deck_equivariant(isotopy):
    """Test every family lifts to a deck-equivariant isotopy from the identity."""
    assert equivariance_error(isotopy) < 1e-12


def test_twist_fixes_center_and_exterior():
    """Test the twist fixes its center and every point off the unit disk."""
    twist = make_twist(CENTER)
    pts = np.array([[2.0, 2.0], [3.5, 2.0], [0.3, 0.7]])

    assert np.array_equal(twist.time_one(pts), pts)
    # r = 1/2 turns by half a revolution
    assert np.allclose(twist.time_one(np.array([2.5, 2.0])), [1.5, 2.0])


def test_twist_rejects_bad_profile():
    """Test profiles must vanish outside the unit disk and the disk must embed."""
    with pytest.raises(ConfigError):
        make_twist(CENTER, 'unknown')
    with pytest.raises(ConfigError):
        make_twist(CENTER, lambda r: np.ones_like(r))
    with pytest.raises(ConfigError):
        make_twist(TorusPoint(1.0, 1.0, L=2.0))


def test_twist_hamiltonian_values():
    """Test the radial Hamiltonians against their closed forms."""
    assert twist_hamiltonian(lambda r: np.where(r < 1, r, 0.0), 0.5) == pytest.approx(
        (2 * math.pi / 3) * (0.5 ** 3 - 1), abs=1e-12)
    assert twist_hamiltonian(plateau_profile, 0.0) == pytest.approx(-7 * math.pi / 12, abs=1e-12)
    assert twist_hamiltonian(plateau_profile, 1.5) == 0.0

    H = make_twist(CENTER).hamiltonian
    assert H(np.array([2.0, 2.0])) == pytest.approx(-2 * math.pi / 3)
    assert H(np.array([3.5, 2.0])) == 0.0


def test_compose_runs_first_then_second(grid_points):
    """Test the time-one map of a composition."""
    first = make_rigid_rotation([0.3, 0.1])
    second = make_rigid_rotation([0.1, 0.2])

    composed = compose(first, second)

    assert np.allclose(composed.time_one(grid_points), grid_points + [0.4, 0.3])
    assert np.allclose(composed.lifted(0.5, grid_points), grid_points + [0.3, 0.1])
    assert composed.segments == 2
    assert np.allclose(compose_pointwise(first, second).time_one(grid_points), grid_points + [0.4, 0.3])


def test_power_iterates(grid_points):
    """Test I^q has time-one map F^q."""
    twist = make_twist(CENTER)

    squared = power(twist, 2)

    assert np.allclose(squared.time_one(grid_points), twist.iterate(grid_points, 2))
    assert squared.segments == 2
    assert np.allclose(squared.lifted(0.5, grid_points), twist.time_one(grid_points))
    with pytest.raises(ValueError):
        power(twist, 0)


def test_inverse_undoes_time_one(grid_points):
    """Test the inverse isotopy ends at F^-1."""
    twist = make_twist(CENTER, 'plateau')

    back = inverse(twist)

    assert np.allclose(back.time_one(twist.time_one(grid_points)), grid_points, atol=1e-12)
    assert np.allclose(back.lifted(0.0, grid_points), grid_points)


def test_newton_inverse_of_shear(grid_points):
    """Test Newton inversion of a map without a closed-form inverse."""
    shear = make_shear()

    recovered = shear.time_one_inverse(shear.time_one(grid_points))

    assert np.allclose(recovered, grid_points, atol=1e-10)
    direct = newton_inverse(shear.time_one, shear.time_one(grid_points), 1e-12)
    assert np.allclose(direct, grid_points, atol=1e-10)


def test_conjugate_moves_fixed_points():
    """Test h F h^-1 fixes the image of a fixed point of F."""
    twist = make_twist(CENTER)
    by = make_rigid_rotation([0.25, -0.5])

    conjugated = conjugate(twist, by)

    moved = np.array([2.25, 1.5])
    assert np.allclose(conjugated.time_one(moved), moved)
    assert np.allclose(conjugated.time_one(np.array([2.75, 1.5])), [1.75, 1.5])


def test_normalize_static_pair():
    """Test two fixed lifts that never move give the lifted isotopy itself."""
    twist = make_twist(CENTER)

    plane = normalize_fixing_two(twist, PlanePoint(2.0, 2.0), PlanePoint(3.5, 2.0))

    assert plane.static
    xy = np.array([[2.4, 2.1]])
    assert np.array_equal(plane.lifted(0.3, xy), twist.lifted(0.3, xy))


def test_normalize_moving_pair_fixes_both_lifts():
    """Test the normalized isotopy fixes a and b at every time."""
    twist = make_twist(CENTER, 'plateau')
    a, b = PlanePoint(2.0, 2.0), PlanePoint(2.25, 2.0)

    plane = normalize_fixing_two(twist, a, b)

    assert not plane.static
    for t in sample_times(1, 16):
        images = plane.lifted(float(t), np.array([[a.x, a.y], [b.x, b.y]]))
        assert np.allclose(images, [[a.x, a.y], [b.x, b.y]], atol=1e-12)


def test_normalize_rejects_moving_lift():
    """Test a lift that is not fixed by F~ is rejected."""
    with pytest.raises(NotFixed):
        normalize_fixing_two(make_twist(CENTER), PlanePoint(2.0, 2.0), PlanePoint(2.5, 2.0))


def test_trajectory_of_static_point_is_degenerate():
    """Test static trajectories collapse to one vertex."""
    twist = make_twist(CENTER)

    assert trajectory(twist, PlanePoint(3.5, 2.0)).degenerate
    moving = trajectory(twist, PlanePoint(2.5, 2.0), steps=32)
    assert not moving.degenerate
    assert len(moving.vertices) == 33


def test_shear_moves_every_point():
    """Test the shear displaces every point by L/10."""
    assert displacement_minimum(make_shear(), 64) == pytest.approx(0.4, abs=1e-12)
    assert displacement_minimum(make_identity(), 16) == 0.0
