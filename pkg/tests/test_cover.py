"""Tests for the covering map and deck group."""
import math

import numpy as np
import pytest

from torusaction.geometry.cover import (
    IDENTITY,
    DeckElement,
    PlanePoint,
    TorusPoint,
    deck_between,
    lift_near,
    lift_near_array,
    project,
    shell,
    torus_delta,
    wrap,
)


def test_torus_point_reduces_coordinates():
    """Test TorusPoint reduces coordinates into [0, L)."""
    z = TorusPoint(5.0, -1.0)

    assert z.x == 1.0
    assert z.y == 3.0
    assert TorusPoint(4.0, 0.0).x == 0.0


def test_torus_point_rejects_bad_modulus():
    """Test a non-positive modulus is rejected."""
    with pytest.raises(ValueError):
        TorusPoint(0.0, 0.0, L=0.0)


def test_torus_distance_wraps():
    """Test the flat distance goes across the fundamental domain edge."""
    assert TorusPoint(0.1, 0.0).distance(TorusPoint(3.9, 0.0)) == pytest.approx(0.2)
    assert TorusPoint(0.0, 0.1).distance(TorusPoint(0.0, 3.9)) == pytest.approx(0.2)


def test_deck_element_arithmetic():
    """Test deck elements form a group acting by translations."""
    alpha = DeckElement(1, -2)
    beta = DeckElement(-3, 5)

    assert alpha + beta == DeckElement(-2, 3)
    assert alpha + (-alpha) == IDENTITY
    assert alpha.radius == 2
    assert alpha.act(PlanePoint(0.5, 0.5), 4.0) == PlanePoint(4.5, -7.5)


def test_shell_sizes():
    """Test shells have 1, 8, 16, ... elements of the given radius."""
    assert list(shell(0)) == [IDENTITY]
    for radius in range(1, 5):
        elements = list(shell(radius))
        assert len(elements) == 8 * radius
        assert all(e.radius == radius for e in elements)
        assert len(set(elements)) == len(elements)


def test_torus_delta_range():
    """Test reduced displacements lie in [-L/2, L/2)."""
    rng = np.random.default_rng(3)
    delta = rng.uniform(-50, 50, size=(200, 2))

    reduced = torus_delta(delta, 4.0)

    assert np.all(reduced >= -2.0)
    assert np.all(reduced < 2.0)
    assert np.allclose(np.round((delta - reduced) / 4.0) * 4.0, delta - reduced)


def test_wrap_and_project_agree():
    """Test wrap matches the covering map on plane points."""
    xy = np.array([[-0.5, 9.25], [4.0, -4.0]])

    wrapped = wrap(xy, 4.0)

    assert np.allclose(wrapped, [[3.5, 1.25], [0.0, 0.0]])
    z = project(PlanePoint(-0.5, 9.25))
    assert (z.x, z.y) == (3.5, 1.25)


def test_lift_near_projects_back():
    """Test lift_near returns a lift within half a diagonal of the reference."""
    rng = np.random.default_rng(11)
    for _ in range(50):
        z = TorusPoint(*rng.uniform(0, 4, size=2))
        ref = PlanePoint(*rng.uniform(-20, 20, size=2))

        lift = lift_near(z, ref)

        back = project(lift)
        assert back.distance(z) < 1e-9
        assert (lift - ref).norm() <= 4.0 * math.sqrt(2) / 2 + 1e-12


def test_lift_near_array_matches_scalar():
    """Test the vectorized lift agrees with lift_near."""
    z = TorusPoint(1.0, 3.0)
    ref = PlanePoint(9.2, -6.1)

    lifted = lift_near_array(z.as_array(), ref.as_array(), 4.0)

    assert np.allclose(lifted, lift_near(z, ref).as_array())


def test_deck_between():
    """Test deck_between recovers the translation between two lifts."""
    start = np.array([1.0, 2.0])

    assert deck_between(start, start + [8.0, -4.0], 4.0) == (2, -1)
    assert deck_between(start, start + [1e-9, 0.0], 4.0) == (0, 0)
