"""
Tests for the frequency-localised kernel, its phase classification and the decay sweep
"""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fdkp.models.errors import DomainError, OscillationBudgetError, QuadratureConvergenceError
from fdkp.models.fields import rho
from fdkp.models.geometry import KernelQuery, PlanePoint
from fdkp.models.quadrature import ComplexQuadResult
from fdkp.routers import kernel as kernel_router
from fdkp.routers.kernel import DecayRequest, kernel_crosscheck, run_decay
from fdkp.services import symbol
from fdkp.services.oscint import (
    QUICK_DIRECTIONS,
    RadialProfile,
    Regime,
    boundary_fan,
    decay_experiment,
    decay_time_window,
    kernel_2d,
    kernel_radial,
    phase_regime,
    phases,
    sup_kernel,
    sweep_radius,
)


def _radial_mass(Lambda: float) -> float:
    """2 pi Lambda^2 int r rho(r) dr, the L^1 norm of rho(|xi|/Lambda)"""
    r = np.linspace(0.5, 2.0, 200_001)
    return 2.0 * math.pi * Lambda**2 * trapezoid(r * rho(r), r)


def test_kernel_at_origin_matches_one_dimensional_integral():
    beta, Lambda, t = 1.0, 1.0, 5.0
    r = np.linspace(0.5, 2.0, 200_001)
    integrand = np.exp(1j * t * np.asarray(symbol.m(beta, Lambda * r))) * r * rho(r)
    expected = 2.0 * Lambda**2 * math.pi * trapezoid(integrand, r).real
    value = kernel_radial(KernelQuery(beta, Lambda, t, PlanePoint(0.0, 0.0)))
    assert abs(value - expected) < 1e-8


def test_kernel_at_time_zero_is_the_bump_transform():
    q = KernelQuery(0.0, 1.0, 0.0, PlanePoint(0.0, 0.0))
    assert kernel_2d(q) == pytest.approx(_radial_mass(1.0), abs=1e-6)
    assert kernel_radial(q) == pytest.approx(_radial_mass(1.0), abs=1e-7)


def test_radial_and_tensor_quadratures_agree():
    q = KernelQuery(1.0, 1.0, 5.0, PlanePoint(3.0, 2.0))
    assert abs(kernel_radial(q) - kernel_2d(q)) < 1e-6


@pytest.mark.parametrize("beta", [0.0, 1.0])
@pytest.mark.parametrize("x", [PlanePoint(1.0, 0.5), PlanePoint(-2.0, 0.0), PlanePoint(0.0, 3.0)])
def test_kernel_is_real_and_bounded(beta, x):
    q = KernelQuery(beta, 2.0, 1.0, x)
    value = kernel_2d(q)
    assert abs(value.imag) < 1e-8
    assert abs(value) <= _radial_mass(2.0) * (1 + 1e-9)
    assert abs(kernel_radial(q).imag) == 0.0


def test_tensor_quadrature_budget():
    with pytest.raises(OscillationBudgetError):
        kernel_2d(KernelQuery(1.0, 1.0, 1e6, PlanePoint(0.0, 0.0)))


def test_tensor_quadrature_raises_when_unsettled():
    q = KernelQuery(1.0, 1.0, 5.0, PlanePoint(3.0, 2.0))
    with pytest.raises(QuadratureConvergenceError) as info:
        kernel_2d(q, max_refinements=0)
    assert info.value.partial.abs_error_estimate == math.inf
    assert info.value.partial.nodes_used > 0
    with pytest.raises(QuadratureConvergenceError) as info:
        kernel_2d(q, tol=1e-30, max_refinements=1)
    partial = info.value.partial
    assert 0 < partial.abs_error_estimate < 1e-2
    assert abs(partial.value - kernel_radial(q)) < 1e-2


def test_phase_regimes():
    far_below = KernelQuery(0.0, 1.0, 100.0, PlanePoint(1.0, 0.0))
    assert phase_regime(far_below) is Regime.NONSTATIONARY_MINUS

    t = 10.0
    critical = symbol.critical_speed(1.0, 4.0) * t
    on_circle = KernelQuery(1.0, 4.0, t, PlanePoint(critical, 0.0))
    assert phase_regime(on_circle) is Regime.STATIONARY
    assert phase_regime(on_circle.at(PlanePoint(10.0 * critical, 0.0))) is Regime.NONSTATIONARY_PLUS
    # x2 = 0, so the transverse component is far inside
    assert phase_regime(on_circle, component="transverse") is Regime.NONSTATIONARY_MINUS


def test_phase_regime_needs_positive_time():
    with pytest.raises(DomainError):
        phase_regime(KernelQuery(1.0, 1.0, 0.0, PlanePoint(1.0, 0.0)))
    with pytest.raises(DomainError):
        phase_regime(KernelQuery(1.0, 1.0, 1.0, PlanePoint(1.0, 0.0)), component="diagonal")


def test_phase_functions():
    q = KernelQuery(1.0, 2.0, 4.0, PlanePoint(3.0, -1.0))
    r = np.linspace(0.5, 2.0, 7)
    out = phases(q, r)
    shift = 2.0 * q.x.r / 4.0
    np.testing.assert_allclose(out["phi_plus"] - out["phi_minus"], 2.0 * shift * r)
    np.testing.assert_allclose(out["dpsi_plus"] - out["dpsi_minus"], 2.0 * 2.0 * 1.0 / 4.0)
    np.testing.assert_allclose(out["d2"], 4.0 * np.asarray(symbol.m_double_prime(1.0, 2.0 * r)))


def test_radial_profile_matches_kernel_radial():
    beta, Lambda, t = 0.0, 1.0, 8.0
    direction = PlanePoint(1.0, 1.0)
    profile = RadialProfile(beta, Lambda, t, direction, max_distance=12.0)
    for distance in (0.0, 2.5, 7.0):
        point = direction.direction().scaled(distance)
        expected = kernel_radial(KernelQuery(beta, Lambda, t, point))
        assert profile(distance) == pytest.approx(expected.real, abs=1e-7)


def test_sup_kernel_is_a_bounded_maximum():
    beta, Lambda, t = 0.0, 1.0, 20.0
    best = sup_kernel(beta, Lambda, t, QUICK_DIRECTIONS, coarse=48)
    assert 0 < best.value <= _radial_mass(Lambda)
    attained = kernel_radial(KernelQuery(beta, Lambda, t, PlanePoint(best.x1, best.x2)))
    assert abs(attained) == pytest.approx(best.value, rel=1e-4)
    assert math.hypot(best.x1, best.x2) <= sweep_radius(beta, Lambda, t) * (1 + 1e-12)


def test_angular_refinement_only_raises_the_sup():
    beta, Lambda, t = 0.0, 1.0, 20.0
    rays_only = sup_kernel(beta, Lambda, t, QUICK_DIRECTIONS, coarse=48, angular_refinements=0)
    refined = sup_kernel(beta, Lambda, t, QUICK_DIRECTIONS, coarse=48)
    assert refined.value >= rays_only.value
    with pytest.raises(DomainError):
        sup_kernel(beta, Lambda, t, QUICK_DIRECTIONS, angular_refinements=-1)


def test_boundary_fan():
    fan = boundary_fan((0.0, 0.1))
    assert fan[0] == PlanePoint(0.0, 1.0)
    assert fan[1].x1 < 0 < fan[1].x2
    assert fan[1].r == pytest.approx(1.0)
    assert all(d.x1 <= 0 for d in QUICK_DIRECTIONS)


def test_decay_time_window_scales_with_dispersion_time():
    window = decay_time_window(1.0, 1.0, points=4)
    assert window.size == 4
    scale = max(1.0, symbol.dispersion_time(1.0, 1.0))
    assert window[0] == pytest.approx(10.0 * scale)
    assert window[-1] == pytest.approx(1e3 * scale)


@pytest.mark.slow
@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_sup_decays_like_inverse_time(beta):
    Lambda = 1.0
    times = decay_time_window(beta, Lambda, points=4)
    table, summaries = decay_experiment(beta, [Lambda], {Lambda: times}, QUICK_DIRECTIONS, coarse=64)
    assert len(table) == 4
    assert summaries[0].slope == pytest.approx(-1.0, abs=0.1)
    np.testing.assert_allclose(table["ratio"], table["sup_abs_I"] / table["predicted"])


def test_crosscheck_on_a_small_lattice():
    result = kernel_crosscheck(1.0, lambdas=(1.0,), times=(0.0, 1.0), points=(PlanePoint(3.0, 2.0),))
    assert result["success"]
    assert result["table"]["converged"].all()


def test_crosscheck_fails_on_unsettled_quadrature(monkeypatch):
    def unsettled(q, tol=1e-8, max_refinements=6):
        raise QuadratureConvergenceError("unsettled", partial=ComplexQuadResult(kernel_radial(q), 1.0, 10))

    monkeypatch.setattr(kernel_router, "kernel_2d", unsettled)
    result = kernel_crosscheck(1.0, lambdas=(1.0,), times=(1.0,), points=(PlanePoint(3.0, 2.0),))
    assert not result["success"]
    assert "1 unsettled" in result["message"]


@pytest.mark.slow
@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_decay_constants_track_the_dispersive_weight(beta):
    result = run_decay(DecayRequest(beta=beta, points=5, coarse=64, quick=True))
    assert result["success"], result["message"]
    constants = [s["constant"] for s in result["summaries"]]
    assert max(constants) / min(constants) <= 3.0
    assert all(abs(s["slope"] + 1.0) <= 0.1 for s in result["summaries"])
