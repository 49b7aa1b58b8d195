"""Tests for action differences, the action function and the classical action."""
import math

import numpy as np
import pytest

from torusaction.action.action import (
    RotationResult,
    action_difference,
    action_differences,
    classical_action,
    cocycle_residual,
    hamiltonian_for,
    rotation_vector_measure,
    solve_action_function,
)
from torusaction.action.measures import Measure
from torusaction.dynamics.families import make_identity, make_rigid_rotation, make_shear, make_twist
from torusaction.dynamics.isotopy import compose
from torusaction.exceptions import ActionError, MeasureError, NotContractibleFixed
from torusaction.geometry.cover import PlanePoint, TorusPoint

CENTER = PlanePoint(2.0, 2.0)
EXTERIOR = PlanePoint(3.5, 2.0)
EXTERIOR_SHIFTED = PlanePoint(7.5, 2.0)
TWO_PI_THIRDS = 2 * math.pi / 3


@pytest.fixture
def twist():
    return make_twist(TorusPoint(2.0, 2.0))


@pytest.fixture
def orbit_measure(twist):
    """Atoms on the period three orbit at radius 1/3."""
    start = TorusPoint(2.0 + math.cos(1.0) / 3, 2.0 + math.sin(1.0) / 3)
    return Measure.periodic_orbit(twist, start)


def test_action_difference_of_twist(twist):
    """Test i_mu(center, exterior) approximates 2*pi/3 with a Richardson error bar."""
    result = action_difference(twist, Measure.lebesgue(), CENTER, EXTERIOR, n=64)

    assert result.value == pytest.approx(TWO_PI_THIRDS, abs=5e-2)
    assert result.error == pytest.approx(abs(result.value - result.coarse))
    assert result.n == 64


def test_action_difference_is_antisymmetric(twist):
    """Test swapping the lifts negates the value exactly."""
    forward, backward = action_differences(twist, Measure.lebesgue(), [(CENTER, EXTERIOR), (EXTERIOR, CENTER)], 16)

    assert backward.value == -forward.value
    assert backward.error == forward.error


def test_action_difference_vanishes_on_exterior_component(twist):
    """Test fixed lifts in the static exterior of the twist have equal action."""
    others = [PlanePoint(3.5, 3.5), PlanePoint(0.5, 0.5), PlanePoint(2.0, 3.6), PlanePoint(0.2, 2.0)]

    results = action_differences(twist, Measure.lebesgue(), [(EXTERIOR, p) for p in others], 256)

    for result in results:
        assert abs(result.value) < 1e-3


def test_action_difference_of_atomic_measure(twist, orbit_measure):
    """Test the atomic action difference is the mean recurrent linking number, without error."""
    result = action_difference(twist, orbit_measure, CENTER, EXTERIOR)

    assert result.value == pytest.approx(1 / 3, abs=1e-15)
    assert result.error == 0.0


def test_action_difference_rejects_bad_input(twist):
    """Test coincident lifts and atoms on fixed points are refused."""
    with pytest.raises(ActionError):
        action_difference(twist, Measure.lebesgue(), CENTER, CENTER, n=8)
    with pytest.raises(MeasureError):
        action_difference(twist, Measure.atomic([[2.0, 2.0]]), CENTER, EXTERIOR)


def test_cocycle_residual():
    """Test the residual of a coboundary vanishes and of a perturbed matrix does not."""
    values = np.array([0.0, 1.0, 3.0])
    pairwise = values[None, :] - values[:, None]

    assert cocycle_residual(pairwise) == 0.0
    pairwise[0, 2] += 0.5
    pairwise[2, 0] -= 0.5
    assert cocycle_residual(pairwise) == pytest.approx(0.5)


def test_solve_action_function_descends(twist):
    """Test the action function of the twist on Lebesgue descends to the torus."""
    report = solve_action_function(twist, Measure.lebesgue(), [CENTER, EXTERIOR, EXTERIOR_SHIFTED],
                                   ['center', 'exterior', 'shifted'], n=64)

    assert report.descended
    assert report.l_mu['center'] == 0.0
    assert report.l_mu['exterior'] == pytest.approx(TWO_PI_THIRDS, abs=5e-2)
    assert report.L_mu['exterior'] == report.L_mu['shifted']
    assert len(report.spectrum) == 2
    assert report.width == pytest.approx(TWO_PI_THIRDS, abs=5e-2)
    assert report.residual <= max(10 * report.quad_error, 1e-9)
    assert report.to_dict()['rho']['n'] == 64


def test_solve_action_function_without_descent(twist):
    """Test the spectrum falls back to the lifts when descent is disabled."""
    report = solve_action_function(twist, Measure.lebesgue(), [CENTER, EXTERIOR], n=16, descend=False)

    assert not report.descended
    assert report.labels == ['p0', 'p1']
    assert len(report.spectrum) == 2


def test_solve_action_function_of_identity():
    """Test the identity has a constant action function."""
    report = solve_action_function(make_identity(), Measure.lebesgue(),
                                   [PlanePoint(1.0, 1.0), PlanePoint(3.0, 3.0)], n=16)

    assert report.width == 0.0
    assert report.spectrum == [0.0]


def test_solve_action_function_needs_two_lifts(twist):
    """Test a single lift is rejected."""
    with pytest.raises(ActionError):
        solve_action_function(twist, Measure.lebesgue(), [CENTER], n=16)


def test_rotation_vector_of_rigid_rotation():
    """Test the rotation vector of a composed rigid rotation."""
    rigid = compose(make_rigid_rotation([0.3, 0.1]), make_rigid_rotation([0.1, 0.2]))

    result = rotation_vector_measure(rigid, Measure.lebesgue(), n=8)

    assert np.allclose(result.vector, [0.4, 0.3], atol=1e-9)
    assert result.error < 1e-12
    assert not result.is_zero(4.0)


def test_rotation_vector_of_shear_atoms_is_exactly_zero():
    """Test opposite invariant circles of the shear cancel exactly."""
    points = [[0.4 * k, 0.0] for k in range(10)] + [[0.4 * k, 2.0] for k in range(10)]

    result = rotation_vector_measure(make_shear(), Measure.atomic(points))

    assert result.vector.tolist() == [0.0, 0.0]
    assert result.is_zero(4.0)


def test_rotation_vector_of_twist_vanishes(twist, orbit_measure):
    """Test the twist has zero rotation vector for Lebesgue and periodic atoms."""
    assert rotation_vector_measure(twist, Measure.lebesgue(), n=16).is_zero(4.0)
    assert rotation_vector_measure(twist, orbit_measure).vector.tolist() == [0.0, 0.0]


def test_rotation_result_zero_threshold():
    """Test the zero test is relative to L."""
    assert RotationResult(np.array([1e-7, 0.0]), 0.0, None, 1.0).is_zero(4.0)
    assert not RotationResult(np.array([1e-5, 0.0]), 0.0, None, 1.0).is_zero(4.0)


def test_classical_action(twist):
    """Test A_H at the twist center and outside the disk."""
    H = hamiltonian_for(twist)

    assert classical_action(H, twist, CENTER) == pytest.approx(TWO_PI_THIRDS, abs=1e-10)
    assert classical_action(H, twist, TorusPoint(3.5, 2.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NotContractibleFixed):
        classical_action(H, twist, PlanePoint(2.5, 2.0))


def test_classical_action_of_plateau():
    """Test the plateau twist center has action 7*pi/12."""
    plateau = make_twist(TorusPoint(2.0, 2.0), 'plateau')

    assert classical_action(hamiltonian_for(plateau), plateau, CENTER) == pytest.approx(7 * math.pi / 12, abs=1e-9)


def test_hamiltonian_for_requires_generator():
    """Test isotopies without a known Hamiltonian are refused."""
    with pytest.raises(ActionError):
        hamiltonian_for(make_shear())
    assert hamiltonian_for(make_twist(TorusPoint(2.0, 2.0))).to_dict()['convention'] == "dH = -i_X omega"
