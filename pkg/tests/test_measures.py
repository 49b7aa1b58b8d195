"""Tests for invariant measures."""
import math

import numpy as np
import pytest

from torusaction.action.measures import Measure
from torusaction.dynamics.families import make_shear, make_twist
from torusaction.exceptions import MeasureError
from torusaction.geometry.cover import TorusPoint

CENTER = TorusPoint(2.0, 2.0)


def test_atomic_default_weights():
    """Test atoms get equal weights summing to one."""
    measure = Measure.atomic([[0.0, 0.0], [1.0, 1.0], [5.0, -1.0]])

    assert measure.is_atomic
    assert np.allclose(measure.weights, 1 / 3)
    assert measure.total_mass() == pytest.approx(1.0)
    assert np.allclose(measure.points[2], [1.0, 3.0])


def test_atomic_validation():
    """Test bad atoms and weights are rejected."""
    with pytest.raises(MeasureError):
        Measure.atomic([[0.0, 0.0]], weights=[-1.0])
    with pytest.raises(MeasureError):
        Measure.atomic([[0.0, 0.0], [1.0, 0.0]], weights=[1.0])
    with pytest.raises(MeasureError):
        Measure.atomic([[0.0, 0.0]], weights=[0.0])
    with pytest.raises(MeasureError):
        Measure(kind='fractal')


def test_lebesgue_cells():
    """Test the Lebesgue grid covers the torus with cells of equal weight."""
    measure = Measure.lebesgue()

    xy, weights = measure.cell_samples(8, 2)

    assert measure.total_mass() == 16.0
    assert measure.full_support
    assert xy.shape == (256, 2)
    assert math.fsum(weights) == pytest.approx(16.0)
    assert np.all((xy > 0) & (xy < 4))


def test_disk_lebesgue():
    """Test the disk measure mass and its grid approximation."""
    measure = Measure.disk_lebesgue(CENTER, 0.5)

    _, weights = measure.cell_samples(128, 2)

    assert measure.total_mass() == pytest.approx(math.pi / 4)
    assert math.fsum(weights) == pytest.approx(math.pi / 4, rel=1e-2)
    assert not measure.full_support
    with pytest.raises(MeasureError):
        Measure.disk_lebesgue(CENTER, 2.5)


def test_periodic_orbit_measure():
    """Test atoms on a periodic orbit of the twist."""
    twist = make_twist(CENTER)
    start = TorusPoint(2.0 + 1 / 3, 2.0)

    measure = Measure.periodic_orbit(twist, start, mass=0.5)

    assert len(measure.points) == 3
    assert np.allclose(measure.weights, 0.5 / 3)
    measure.check_invariance(twist)


def test_periodic_orbit_rejects_irrational_rotation():
    """Test a point turning by an irrational angle is not periodic."""
    twist = make_twist(CENTER)

    with pytest.raises(MeasureError):
        Measure.periodic_orbit(twist, TorusPoint(2.0 + math.sqrt(0.5), 2.0), cap=50)


def test_lebesgue_invariance_under_twist():
    """Test the twist preserves area and the disk measure about its center."""
    twist = make_twist(CENTER)

    assert Measure.lebesgue().check_invariance(twist) < 1e-5
    Measure.disk_lebesgue(CENTER, 0.5).check_invariance(twist)
    with pytest.raises(MeasureError):
        Measure.disk_lebesgue(TorusPoint(2.5, 2.0), 0.5).check_invariance(twist)


def test_atomic_invariance_under_shear():
    """Test the shear permutes equally spaced atoms on its invariant circles."""
    shear = make_shear()
    circle = [[0.4 * k, 0.0] for k in range(10)]

    Measure.atomic(circle).check_invariance(shear)
    with pytest.raises(MeasureError):
        Measure.atomic(circle[:9]).check_invariance(shear)
    with pytest.raises(MeasureError):
        Measure.atomic(circle, weights=[2.0] + [1.0] * 9).check_invariance(shear)


def test_atoms_on_fixed_points_rejected():
    """Test atoms on contractible fixed points are refused."""
    twist = make_twist(CENTER)

    with pytest.raises(MeasureError):
        Measure.atomic([[2.0, 2.0]]).check_atoms_off_fixed(twist)
    Measure.atomic([[2.0 + 1 / 3, 2.0]]).check_atoms_off_fixed(twist)


def test_measure_to_dict():
    """Test measure descriptions for reports."""
    assert Measure.lebesgue().to_dict()['mass'] == 16.0
    assert Measure.disk_lebesgue(CENTER, 0.5).to_dict()['radius'] == 0.5
    assert Measure.atomic([[0.0, 0.0]]).to_dict()['atoms'] == 1
