"""
Tests for J_+ and its arcsine / Laplace decomposition
"""

import math

import numpy as np
import pytest
from scipy.special import j0, struve, y0

from fdkp.models.errors import DomainError, OscillationBudgetError
from fdkp.models.geometry import PlanePoint
from fdkp.services.besselasym import (
    F,
    F_pm,
    JPlusRay,
    f_a,
    identity_residuals,
    j_minus,
    j_plus_agreement,
    j_plus_direct,
    j_plus_grid,
    j_plus_identity,
    j_plus_reassembled,
    j_plus_series,
    random_points,
    verify_fa_decay,
)


def test_j_plus_at_origin():
    assert j_plus_direct(PlanePoint(0.0, 0.0)) == pytest.approx(math.pi, abs=1e-13)


@pytest.mark.parametrize("radius", [0.5, 3.0, 10.0])
@pytest.mark.parametrize("angle", [0.3, 2.0, -1.2])
def test_real_part_is_half_of_j0(radius, angle):
    x = PlanePoint(radius * math.cos(angle), radius * math.sin(angle))
    assert j_plus_direct(x).real == pytest.approx(math.pi * j0(radius), abs=1e-9)


def test_j_plus_and_j_minus_sum_to_full_circle():
    x = PlanePoint(4.0, -1.5)
    total = j_plus_direct(x) + j_minus(x)
    assert abs(total - 2.0 * math.pi * j0(x.r)) < 1e-9


def test_stationary_phase_size():
    assert abs(j_plus_direct(PlanePoint(20.0, 0.0))) <= math.sqrt(2.0 * math.pi / 20.0) * 1.2


def test_direct_budget():
    with pytest.raises(OscillationBudgetError) as info:
        j_plus_direct(PlanePoint(2e5, 0.0))
    assert info.value.budget == 1e5


def test_arcsine_integrals():
    assert F(7.0, 0.0) == 0j
    assert F_pm(1, 7.0, 1.0) == 0j
    assert F_pm(-1, 7.0, 1.0) == 0j
    assert abs(F(5.0, 1.0) - math.pi * j0(5.0)) < 1e-10


def test_specialisations_on_the_axes():
    r = 6.0
    on_x1 = j_plus_direct(PlanePoint(r, 0.0))
    assert abs(on_x1 - F_pm(1, r, 0.0)) < 1e-9
    on_x2 = j_plus_direct(PlanePoint(0.0, r))
    assert abs(on_x2 - F(r, 1.0)) < 1e-9


def test_laplace_factor_at_a_zero():
    """f_0^+-(10) = -+i int e^{-10s} (s^2 + 1)^{-1/2} ds"""
    integral = 0.5 * math.pi * (struve(0, 10.0) - y0(10.0))
    assert abs(f_a(1, 10.0, 0.0) - (-1j * integral)) < 1e-9
    assert abs(f_a(-1, 10.0, 0.0) - (1j * integral)) < 1e-9


def test_identity_residuals():
    residuals = identity_residuals([1.0, 10.0, 100.0], [0.0, 0.3, 1.0 / math.sqrt(2.0), 1.0])
    assert len(residuals) == 12
    assert residuals[["F", "F+", "F-"]].to_numpy().max() < 1e-8


def test_identity_and_reassembly_agree_with_direct():
    points = random_points(8, 1.0, 50.0, seed=3)
    quadrants = {(p.x1 > 0, p.x2 > 0) for p in points}
    assert len(quadrants) == 4
    table = j_plus_agreement(points)
    assert table["direct_vs_identity"].max() < 1e-8
    assert table["direct_vs_reassembled"].max() < 1e-8
    assert table["direct_vs_series"].max() < 1e-8


def test_numpy_scalar_coordinates():
    x = PlanePoint(np.float64(-0.5), np.float64(1.2))
    assert x.s1 == -1
    assert type(x.s1) is int
    assert type(x.x1) is float
    assert PlanePoint(np.float64(0.0), np.float64(2.0)).s1 == 0
    from_numpy = PlanePoint(np.float64(3.0), np.float64(-2.0))
    assert abs(j_plus_identity(from_numpy) - j_plus_direct(PlanePoint(3.0, -2.0))) < 1e-8


def test_identity_on_the_x2_axis_uses_direct_quadrature():
    x = PlanePoint(0.0, 5.0)
    assert j_plus_identity(x) == j_plus_direct(x)
    assert abs(j_plus_reassembled(x) - j_plus_direct(x)) < 1e-8


def test_series_and_grid_rules():
    x1 = np.array([3.0, -2.0, 0.0, 12.0])
    x2 = np.array([-2.0, 0.5, 4.0, 9.0])
    grid = j_plus_grid(x1, x2)
    series = j_plus_series(x1, x2)
    for k in range(x1.size):
        direct = j_plus_direct(PlanePoint(x1[k], x2[k]))
        assert abs(grid[k] - direct) < 1e-10
        assert abs(series[k] - direct) < 1e-9


def test_ray_interpolant_matches_direct():
    direction = PlanePoint(-1.0, 2.0)
    ray = JPlusRay(direction, 16.0, 80.0)
    radii = np.array([16.0, 23.7, 41.2, 80.0])
    values = ray(radii)
    unit = direction.direction()
    for radius, value in zip(radii, values):
        direct = j_plus_direct(unit.scaled(radius))
        assert abs(value - direct) < 1e-6
    with pytest.raises(DomainError):
        ray(np.array([90.0]))


@pytest.mark.parametrize("sign", [1, -1])
def test_fa_decay_constants_are_bounded(sign):
    r_grid = np.geomspace(1.0, 1e3, 13)
    report = verify_fa_decay(sign, [0.0, 0.5, 1.0 / math.sqrt(2.0), 1.0], r_grid)
    assert report.r_max_list == [100.0, 1000.0]
    assert report.bounded
    assert all(math.isfinite(v) and v > 0 for v in report.sup_j0.values())
    assert report.sup_below_one is None


@pytest.mark.parametrize(
    "call",
    [
        lambda: f_a(0, 1.0, 0.5),
        lambda: f_a(1, 1.0, 1.5),
        lambda: f_a(1, 1e-4, 0.5),
        lambda: F(1.0, -0.1),
        lambda: j_plus_identity(PlanePoint(0.0, 0.0)),
        lambda: verify_fa_decay(1, [0.5], [1e5]),
    ],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()
