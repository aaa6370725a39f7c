"""
Tests for the dispersion symbol and its auxiliary functions
"""

import math

import numpy as np
import pytest

from fdkp.models.errors import DomainError
from fdkp.services import symbol
from fdkp.services.symbol import DispersionSymbol, ratio_bounds, symbol_table


def test_symbol_values():
    """Closed-form values at r = 0 and r = 1"""
    assert symbol.m(0.0, 0.0) == 0.0
    assert symbol.m(0.0, 1.0) == pytest.approx(math.sqrt(math.tanh(1.0)), abs=1e-12)
    assert symbol.m(0.0, 1.0) == pytest.approx(0.8726936, abs=1e-7)
    assert symbol.m(1.0, 1.0) == pytest.approx(math.sqrt(2.0 * math.tanh(1.0)), abs=1e-12)
    assert symbol.m(1.0, 1.0) == pytest.approx(1.2341752, abs=1e-7)


def test_symbol_accepts_arrays_and_scalars():
    r = np.array([0.0, 0.5, 2.0])
    values = symbol.m(1.0, r)
    assert isinstance(values, np.ndarray)
    assert values.shape == r.shape
    assert isinstance(symbol.m(1.0, 0.5), float)


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_symbol_is_finite_and_increasing(beta):
    r = np.concatenate([[0.0], np.geomspace(1e-8, 1e6, 2000)])
    values = np.asarray(symbol.m(beta, r))
    assert np.all(np.isfinite(values))
    assert np.all(np.diff(values) > 0)
    assert np.all(np.asarray(symbol.m_prime(beta, r)) > 0)


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_first_derivative_matches_finite_difference(beta):
    r = np.geomspace(1e-2, 1e2, 60)
    h = 1e-5 * r
    difference = (np.asarray(symbol.m(beta, r + h)) - np.asarray(symbol.m(beta, r - h))) / (2.0 * h)
    np.testing.assert_allclose(symbol.m_prime(beta, r), difference, rtol=1e-6)


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_second_derivative_matches_finite_difference(beta):
    r = np.geomspace(1e-2, 1e2, 60)
    h = 1e-3 * r
    difference = (
        np.asarray(symbol.m(beta, r + h)) - 2.0 * np.asarray(symbol.m(beta, r)) + np.asarray(symbol.m(beta, r - h))
    ) / (h * h)
    np.testing.assert_allclose(symbol.m_double_prime(beta, r), difference, rtol=1e-4)


def test_derivative_limits_at_origin():
    assert symbol.m_prime(0.0, 1e-8) == pytest.approx(1.0, rel=1e-10)
    # m_0 = r - r^3/6 and m_1 = r + r^3/3 near the origin
    assert symbol.m_double_prime(0.0, 1e-6) / 1e-6 == pytest.approx(-1.0, rel=1e-6)
    assert symbol.m_double_prime(1.0, 1e-6) / 1e-6 == pytest.approx(2.0, rel=1e-6)


def test_pure_gravity_curvature_is_negative():
    r = np.geomspace(1e-3, 1e3, 500)
    assert np.all(np.asarray(symbol.m_double_prime(0.0, r)) < 0)


def test_aux_E():
    assert symbol.aux_E(1.0) == pytest.approx((math.exp(2) - math.exp(-2) - 4.0) / 4.0, rel=1e-14)
    assert symbol.aux_E(1.0) == pytest.approx(0.8134302, abs=1e-7)
    assert symbol.aux_E(1e-4) / 1e-4 == pytest.approx(2.0 / 3.0, rel=1e-8)
    assert symbol.aux_E(50.0) * 4.0 * 50.0**2 * math.exp(-100.0) == pytest.approx(1.0, abs=1e-8)
    assert math.isfinite(symbol.aux_E(300.0))


def test_aux_E_branches_are_continuous():
    for edge in (symbol.R_SWITCH, symbol.R_EXP_FACTOR):
        below = symbol.aux_E(edge * (1 - 1e-9))
        above = symbol.aux_E(edge * (1 + 1e-9))
        assert below == pytest.approx(above, rel=1e-7)


def test_K_squared_times_r_is_tanh():
    r = np.geomspace(1e-6, 30.0, 400)
    np.testing.assert_allclose(np.asarray(symbol.K(r)) ** 2 * r, np.tanh(r), rtol=1e-14)


def test_f_beta_range():
    r = np.geomspace(1e-3, 1e3, 10_000)
    assert np.all(np.asarray(symbol.f_beta_ratio(0.0, r)) == -1.0)
    f_values = np.asarray(symbol.f_beta_ratio(1.0, r))
    assert np.all(f_values > 1.0)
    assert np.all(f_values <= 3.0 + 1e-12)


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_derivative_ratio_bounds(beta):
    """m' and |m''| are comparable to their weights with C/c <= 10"""
    table = symbol_table(beta)
    for column in ("ratio_m'", "ratio_m''"):
        lo, hi, spread = ratio_bounds(table[column])
        assert lo > 0
        assert spread <= 10.0


def test_symbol_table_columns():
    table = symbol_table(1.0, points=50)
    assert list(table.columns) == ["r", "m", "m'", "m''", "ratio_m'", "ratio_m''", "f_beta"]
    assert len(table) == 50
    with pytest.raises(DomainError):
        symbol_table(1.0, rmin=10.0, rmax=1.0)


def test_dispersion_symbol_object():
    m1 = DispersionSymbol(1.0)
    assert m1(2.0) == symbol.m(1.0, 2.0)
    assert m1.prime(2.0) == symbol.m_prime(1.0, 2.0)
    assert m1.double_prime(2.0) == symbol.m_double_prime(1.0, 2.0)
    assert m1.f(2.0) == symbol.f_beta_ratio(1.0, 2.0)
    with pytest.raises(DomainError):
        DispersionSymbol(-1.0)


@pytest.mark.parametrize(
    "call",
    [
        lambda: symbol.m(0.0, -1.0),
        lambda: symbol.m(-1.0, 1.0),
        lambda: symbol.m(0.0, float("nan")),
        lambda: symbol.m(float("inf"), 1.0),
        lambda: symbol.aux_E(0.0),
        lambda: symbol.f_beta_ratio(1.0, 0.0),
    ],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_dispersive_weight_and_critical_speed():
    assert symbol.critical_speed(0.0, 1.0) == pytest.approx(2.0**-0.25)
    assert symbol.dispersive_weight(0.0, 1.0) == pytest.approx(2.0**0.75)
    assert symbol.dispersive_weight(1.0, 1.0) == pytest.approx(2.0**0.25)
    v_min, v_max = symbol.group_velocity_bounds(1.0, 1.0)
    assert 0 < v_min < v_max
