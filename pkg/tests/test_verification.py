"""Tests for the iteration, nonconstancy, Kac, conjugation and classical checks."""
import math

import pytest

from torusaction.action.action import hamiltonian_for, solve_action_function
from torusaction.action.measures import Measure
from torusaction.action.verification import (
    CONSTANT,
    NONCONSTANT,
    VIOLATED,
    classical_cross_check,
    kac_check,
    verify_conjugation,
    verify_iteration,
    verify_schwarz,
)
from torusaction.dynamics.families import make_identity, make_shear, make_slide, make_twist
from torusaction.dynamics.orbits import ReturnDisk
from torusaction.exceptions import MeasureError
from torusaction.geometry.cover import PlanePoint, TorusPoint

CENTER = PlanePoint(2.0, 2.0)
EXTERIOR = PlanePoint(3.5, 2.0)


def _at_radius(r, angle=1.0):
    return TorusPoint(2.0 + r * math.cos(angle), 2.0 + r * math.sin(angle))


@pytest.fixture
def twist():
    return make_twist(TorusPoint(2.0, 2.0))


def test_iteration_formula_on_periodic_atoms(twist):
    """Test i_mu(I^q) = q * i_mu(I) on a period three orbit."""
    measure = Measure.periodic_orbit(twist, _at_radius(1 / 3))

    report = verify_iteration(twist, measure, CENTER, EXTERIOR, [1, 2, 4])

    assert report.passed
    assert report.base == pytest.approx(1 / 3)
    assert [check.value for check in report.checks] == pytest.approx([1 / 3, 2 / 3, 4 / 3])
    assert report.to_dict()['checks'][1]['q'] == 2


def test_iteration_formula_on_lebesgue(twist):
    """Test the iteration formula with the Lebesgue measure."""
    report = verify_iteration(twist, Measure.lebesgue(), CENTER, EXTERIOR, [2], n=64)

    assert report.checks[0].value == pytest.approx(2 * report.base, abs=0.1)


def test_schwarz_nonconstant_for_twist(twist):
    """Test the twist has an action function of positive width."""
    report = verify_schwarz(twist, Measure.lebesgue(), [CENTER, EXTERIOR], ['center', 'exterior'],
                            n=32, fixed_grid=16)

    assert report.verdict == NONCONSTANT
    assert report.width == pytest.approx(2 * math.pi / 3, abs=0.15)
    assert report.passed


def test_schwarz_width_grows_linearly(twist):
    """Test the width of I^k grows like k times the width of I."""
    report = verify_schwarz(twist, Measure.lebesgue(), [CENTER, EXTERIOR], n=32,
                            powers=[1, 2, 3], fixed_grid=16)

    assert sorted(report.widths) == [1, 2, 3]
    assert report.slope == pytest.approx(2 * math.pi / 3, rel=0.1)


def test_schwarz_constant_for_identity():
    """Test the identity has a constant action function."""
    report = verify_schwarz(make_identity(), Measure.lebesgue(), [PlanePoint(1.0, 1.0), PlanePoint(3.0, 3.0)],
                            n=16, fixed_grid=8)

    assert report.verdict == CONSTANT


def test_schwarz_hypotheses_violated():
    """Test each failed hypothesis is reported."""
    shear = make_shear()
    atoms = Measure.atomic([[0.4 * k, 0.0] for k in range(10)] + [[0.4 * k, 2.0] for k in range(10)])
    no_fixed = verify_schwarz(shear, atoms, [], fixed_grid=16)

    assert no_fixed.verdict == VIOLATED
    assert "no contractible fixed points" in no_fixed.reasons
    assert "measure without full support" in no_fixed.reasons
    assert not no_fixed.passed

    twist = make_twist(TorusPoint(2.0, 2.0))
    disk = verify_schwarz(twist, Measure.disk_lebesgue(TorusPoint(2.0, 2.0), 0.5), [CENTER, EXTERIOR],
                          n=16, fixed_grid=16)
    assert disk.reasons == ["measure without full support"]


def test_kac_on_one_orbit(twist):
    """Test the return-time integral equals the mass of a single periodic orbit."""
    z = _at_radius(1 / 3)
    measure = Measure.periodic_orbit(twist, z)

    report = kac_check(twist, measure, ReturnDisk(z, 0.05))

    assert report.atoms_in_disk == 1
    assert report.return_integral == pytest.approx(1.0, abs=1e-12)
    assert report.passed


def test_kac_on_two_orbits(twist):
    """Test orbits missing the disk do not count on either side."""
    z = _at_radius(1 / 3)
    first = Measure.periodic_orbit(twist, z, mass=1.0)
    second = Measure.periodic_orbit(twist, _at_radius(0.4), mass=0.5)
    measure = Measure.atomic(list(first.points) + list(second.points),
                             list(first.weights) + list(second.weights))

    report = kac_check(twist, measure, ReturnDisk(z, 0.05))

    assert report.orbit_mass == pytest.approx(1.0, abs=1e-12)
    assert report.passed


def test_kac_needs_atoms(twist):
    """Test grid measures are refused."""
    with pytest.raises(MeasureError):
        kac_check(twist, Measure.lebesgue(), ReturnDisk(_at_radius(1 / 3), 0.05))


def test_conjugation_preserves_spectrum(twist):
    """Test an area-preserving conjugacy leaves the spectrum unchanged."""
    report = verify_conjugation(twist, make_slide(0.3), Measure.lebesgue(), [CENTER, EXTERIOR], n=32)

    assert report.passed
    assert len(report.conjugate_spectrum) == 2


def test_classical_cross_check(twist):
    """Test the classical action gap matches the solved width."""
    report = solve_action_function(twist, Measure.lebesgue(), [CENTER, EXTERIOR], ['center', 'exterior'], n=64)

    result = classical_cross_check(report, hamiltonian_for(twist), twist)

    assert result.action_gap == pytest.approx(2 * math.pi / 3, abs=1e-9)
    assert result.actions['center'] == pytest.approx(2 * math.pi / 3, abs=1e-9)
    assert result.slope == pytest.approx(-1.0, abs=0.05)
    assert result.passed
