"""Tests for fixed points and linking numbers."""
import numpy as np
import pytest

from torusaction.dynamics.families import make_identity, make_rigid_rotation, make_twist
from torusaction.dynamics.isotopy import compose, compose_pointwise, conjugate, equivariance_error, inverse, power
from torusaction.dynamics.linking import (
    check_linking_properties,
    find_fixed_points,
    fixed_point_components,
    linking_at_fixed,
    linking_matrix,
    linking_pair,
    wb_diagnostic,
)
from torusaction.exceptions import LinkingError, NotContractibleFixed, NotFixed
from torusaction.geometry.cover import PlanePoint, TorusPoint

CENTER = PlanePoint(2.0, 2.0)
INNER = PlanePoint(2.25, 2.0)
EXTERIOR = PlanePoint(3.5, 2.0)


@pytest.fixture
def twist():
    return make_twist(TorusPoint(2.0, 2.0))


@pytest.fixture
def plateau():
    return make_twist(TorusPoint(2.0, 2.0), 'plateau')


def test_static_points_do_not_link(twist):
    """Test two fixed points that never move have linking number 0."""
    assert linking_pair(twist, CENTER, EXTERIOR) == 0


def test_plateau_center_links_inner_point(plateau):
    """Test a point turning once around the center links it once, symmetrically."""
    assert linking_pair(plateau, CENTER, INNER) == 1
    assert linking_pair(plateau, INNER, CENTER) == 1
    assert linking_pair(plateau, INNER, EXTERIOR) == 0


def test_linking_requires_fixed_lifts(twist):
    """Test non-fixed or coincident lifts are rejected."""
    with pytest.raises(NotFixed):
        linking_pair(twist, CENTER, PlanePoint(2.5, 2.0))
    with pytest.raises(LinkingError):
        linking_pair(twist, CENTER, CENTER)


def test_linking_matrix(plateau):
    """Test the matrix is symmetric with a zero diagonal."""
    exterior_shifted = PlanePoint(7.5, 2.0)

    matrix = linking_matrix(plateau, [CENTER, INNER, EXTERIOR, exterior_shifted],
                            ['center', 'inner', 'exterior', 'shifted'], threads=2)

    assert np.array_equal(matrix.values, matrix.values.T)
    assert np.all(np.diag(matrix.values) == 0)
    assert matrix.value('center', 'inner') == 1
    assert matrix.value('exterior', 'shifted') == 0
    assert matrix.max_abs == 1
    assert ('inner', 'center', 1) in list(matrix.rows())
    assert matrix.to_dict()['values'][0][1] == 1
    with pytest.raises(LinkingError):
        matrix.value('center', 'center')


def test_wb_diagnostic(plateau):
    """Test row and global bounds of the sampled linking numbers."""
    report = wb_diagnostic(plateau, [CENTER, INNER, EXTERIOR], ['center', 'inner', 'exterior'])

    assert report.row_bounds == {'center': 1, 'inner': 1, 'exterior': 0}
    assert report.global_bound == 1
    assert report.rows_at_max == ['center', 'inner']
    assert report.to_dict()['evidence'] == 'sampled'


def test_linking_at_fixed(plateau, twist):
    """Test the deck sum of linking differences at a third fixed point."""
    assert linking_at_fixed(plateau, CENTER, EXTERIOR, TorusPoint(2.25, 2.0)) == 1
    assert linking_at_fixed(twist, CENTER, EXTERIOR, TorusPoint(0.5, 0.5)) == 0
    with pytest.raises(NotContractibleFixed):
        linking_at_fixed(twist, CENTER, EXTERIOR, TorusPoint(2.5, 2.0))
    with pytest.raises(LinkingError):
        linking_at_fixed(twist, CENTER, EXTERIOR, TorusPoint(3.5, 2.0))


def test_find_fixed_points_of_translation():
    """Test a rigid rotation without fixed points."""
    assert find_fixed_points(make_rigid_rotation([0.3, 0.1]), grid_n=16) == []


def test_find_fixed_points_of_twist(twist):
    """Test the twist fixes its center and the complement of the disk."""
    records = find_fixed_points(twist, grid_n=32)
    components = fixed_point_components(records, 32, 4.0)

    assert all(r.contractible for r in records)
    assert any(r.point.distance(TorusPoint(2.0, 2.0)) < 1e-9 for r in records)
    center = [c for c in components if c.representative.point.distance(TorusPoint(2.0, 2.0)) < 1e-9]
    assert len(center) == 1
    assert center[0].size == 1
    assert max(c.size for c in components) > 500


def test_find_fixed_points_rejects_coarse_grid():
    """Test the seed grid has a minimum size."""
    with pytest.raises(ValueError):
        find_fixed_points(make_identity(), grid_n=4)


def test_linking_properties(plateau):
    """Test local constancy, deck invariance, same-fiber and vanishing checks on the plateau twist."""
    report = check_linking_properties(plateau, [CENTER, INNER, EXTERIOR], seed=3)

    assert report.passed, report.failures
    assert report.checks['locally_constant'] > 0
    assert report.checks['deck_invariant'] == 3
    assert report.checks['same_fiber_zero'] == 3
    assert report.to_dict()['evidence'] == 'sampled'


@pytest.mark.parametrize("derive, lifts, expected", [
    (lambda f: power(f, 2), (CENTER, INNER), 2),
    (lambda f: power(f, 3), (CENTER, INNER), 3),
    (lambda f: power(f, 5), (CENTER, INNER), 5),
    (lambda f: compose(f, f), (CENTER, INNER), 2),
    (lambda f: compose_pointwise(f, f), (CENTER, INNER), 2),
    (lambda f: inverse(f), (CENTER, INNER), -1),
    (lambda f: conjugate(f, make_rigid_rotation([0.3, 0.1])),
     (PlanePoint(2.3, 2.1), PlanePoint(2.55, 2.1)), 1),
], ids=["power2", "power3", "power5", "compose", "pointwise", "inverse", "conjugate"])
def test_linking_of_derived_isotopies(plateau, derive, lifts, expected):
    """Test linking numbers of powers, products, inverses and conjugates of the plateau twist."""
    derived = derive(plateau)
    a, b = lifts

    assert equivariance_error(derived) < 1e-9
    assert linking_pair(derived, a, b) == expected
    assert linking_pair(derived, PlanePoint(a.x + 4.0, a.y - 4.0), PlanePoint(b.x + 4.0, b.y - 4.0)) == expected


def _plateau_fixed_point(rng):
    """Random contractible fixed point of the plateau twist, inside its rigid core or outside its disk."""
    if rng.random() < 0.5:
        r, angle = rng.uniform(0.1, 0.45), rng.uniform(0.0, 2 * np.pi)
        return 2.0 + r * np.cos(angle), 2.0 + r * np.sin(angle)
    while True:
        x, y = rng.uniform(0.0, 4.0, size=2)
        if np.hypot(x - 2.0, y - 2.0) > 1.05:
            return x, y


def test_linking_at_fixed_is_a_cocycle(plateau):
    """Test the deck sums over a, b, c at a fixed z add up to zero around the triangle."""
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 12:
        points = [(2.0, 2.0)] + [_plateau_fixed_point(rng) for _ in range(3)]
        zx, zy = points.pop()
        if min(np.hypot(x - zx, y - zy) for x, y in points) < 0.05:
            continue
        a, b, c = [PlanePoint(x + 4.0 * m, y + 4.0 * n)
                   for (x, y), (m, n) in zip(points, rng.integers(-1, 2, size=(3, 2)))]
        z = TorusPoint(zx, zy)

        total = linking_at_fixed(plateau, a, b, z) + linking_at_fixed(plateau, b, c, z) \
            + linking_at_fixed(plateau, c, a, z)

        assert total == 0
        checked += 1
