"""
Tests for the pseudo-spectral FDKP solver, its ledger and the 1-D Whitham reduction
"""

import math

import numpy as np
import pytest

from fdkp.models.errors import BlowUpError, DomainError
from fdkp.models.solver import SolverConfig
from fdkp.services.solver import (
    EvolutionState,
    WhithamState,
    _phi_closed,
    conserved_quantities,
    constrained_bump,
    dealias,
    dealias_mask,
    dealiased_product,
    etd_coefficients,
    evolve,
    gaussian_bump,
    hamiltonian,
    initial_data,
    initial_state,
    kdv_reference_run,
    linear_flow,
    observed_order,
    reduction_profile,
    rough_data,
    step,
    whitham_run,
    whitham_scaling,
    whitham_step,
    x2_independent,
)
from fdkp.services.spectral import SpectralField2D
from fdkp.utils.config import InitialDataConfig


def test_etd_coefficients_small_argument_limits():
    z = np.array([0.0, 1e-8, 1e-8j])
    q, f1, f2, f3 = etd_coefficients(z)
    np.testing.assert_allclose(q, 0.5, atol=1e-8)
    for f in (f1, f2, f3):
        np.testing.assert_allclose(f, 1.0 / 6.0, atol=1e-8)


def test_etd_contour_mean_matches_closed_form():
    z = np.array([0.3j, -0.4 + 0.1j, 0.45])
    for contour, closed in zip(etd_coefficients(z, 64), _phi_closed(z)):
        np.testing.assert_allclose(contour, closed, rtol=1e-10)


def test_dealias_mask(small_grid):
    mask = dealias_mask(small_grid, "two-thirds")
    assert mask.shape == (17, 32)
    assert mask[10, 0] and not mask[11, 0]
    assert mask[0, 10] and not mask[0, 11] and not mask[0, 16]
    assert dealias_mask(small_grid, "none").all()


def test_dealiased_product_keeps_retained_modes(small_config):
    grid = small_config.grid
    u = SpectralField2D.from_function(grid, lambda x1, x2: np.cos(x1) + np.sin(2 * x2))
    square = dealiased_product(u, u, small_config)
    np.testing.assert_allclose(square.values, u.values**2, atol=1e-12)


def test_linear_step_is_exact(small_config, small_grid):
    config = small_config.model_copy(update={"kappa": 0.0})
    u0 = dealias(constrained_bump(small_grid, 0.1, 0.6), config)
    state = step(initial_state(u0, config), config)
    expected = linear_flow(u0, config.beta, config.dt)
    np.testing.assert_allclose(state.field.values, expected.values, atol=1e-13)
    assert state.time == pytest.approx(config.dt)


def test_linear_flow_moves_long_waves_towards_positive_x1():
    config = SolverConfig(beta=0.0, n1=128, n2=8, L1=40.0, L2=40.0)
    x1 = np.arange(128) * 40.0 / 128
    profile = np.exp(-((x1 - 20.0) ** 2) / 2.0)
    u0 = x2_independent(config.grid, profile)
    u0 = u0.with_coefficients(np.where(np.arange(65)[:, None] == 0, 0.0, u0.coefficients))
    moved = reduction_profile(linear_flow(u0, 0.0, 4.0))
    assert x1[np.argmax(moved)] > 20.0


@pytest.mark.parametrize("beta", [0.0, 1.0])
@pytest.mark.parametrize("scheme", ["etdrk4", "ifrk4"])
def test_conservation(beta, scheme, small_grid):
    config = SolverConfig(beta=beta, n1=32, n2=32, dt=5e-3, scheme=scheme)
    u0 = constrained_bump(small_grid, 0.1, 0.6)
    final = evolve(initial_state(u0, config), config, 0.5, record_every=20)
    l2 = np.array([entry.l2 for entry in final.ledger])
    h = np.array([entry.hamiltonian for entry in final.ledger])
    assert len(final.ledger) == 6
    assert np.max(np.abs(l2 - l2[0])) / l2[0] < 1e-8
    assert np.max(np.abs(h - h[0])) / abs(h[0]) < 1e-6


def test_hamiltonian_needs_zero_mass(small_config, small_grid):
    assert hamiltonian(gaussian_bump(small_grid, 0.1, 0.6), small_config) is None
    assert hamiltonian(SpectralField2D.zeros(small_grid), small_config) == 0.0
    bump = constrained_bump(small_grid, 0.1, 0.6)
    l2, h = conserved_quantities(initial_state(bump, small_config), small_config)
    assert l2 == pytest.approx(bump.l2_norm())
    assert h is not None and h > 0


def test_evolve_lands_on_final_time(small_config, small_grid):
    u0 = constrained_bump(small_grid, 0.05, 0.6)
    final = evolve(initial_state(u0, small_config), small_config, 0.025, record_every=1000)
    assert final.time == 0.025
    assert [entry.time for entry in final.ledger] == [0.0, 0.025]
    assert final.dt == pytest.approx(0.025 / 3)


def test_evolve_reports_each_record(small_config, small_grid):
    seen = []
    u0 = constrained_bump(small_grid, 0.05, 0.6)
    evolve(initial_state(u0, small_config), small_config, 0.1, record_every=5, on_record=lambda s: seen.append(s.time))
    assert seen == pytest.approx([0.05, 0.1])


def test_blow_up_keeps_last_good_state(small_grid):
    config = SolverConfig(beta=1.0, n1=32, n2=32, dt=0.1)
    u0 = constrained_bump(small_grid, 1e3, 0.6)
    with pytest.raises(BlowUpError) as info:
        evolve(initial_state(u0, config), config, 5.0, record_every=1)
    last_good = info.value.last_good_state
    assert isinstance(last_good, EvolutionState)
    assert np.all(np.isfinite(last_good.field.values))
    assert info.value.time > last_good.time


def test_evolve_validation(small_config, small_grid):
    state = initial_state(constrained_bump(small_grid, 0.05, 0.6), small_config)
    with pytest.raises(DomainError):
        evolve(state, small_config, -1.0)
    with pytest.raises(DomainError):
        evolve(state, small_config, 1.0, record_every=0)
    with pytest.raises(DomainError):
        EvolutionState(field=state.field, time=-1.0)


def test_initial_data_kinds(small_config):
    grid = small_config.grid
    constrained = initial_data(small_config, InitialDataConfig(kind="constrained", amplitude=0.2, width=0.6))
    assert constrained.lp_norm(math.inf) == pytest.approx(0.2)
    assert np.max(np.abs(constrained.coefficients[0])) < 1e-15

    rough = rough_data(grid, 1.0, 0.1, 0.05, seed=7)
    assert rough.l2_norm() == pytest.approx(0.05)
    assert np.max(np.abs(rough.coefficients[0])) < 1e-15
    np.testing.assert_array_equal(rough.values, rough_data(grid, 1.0, 0.1, 0.05, seed=7).values)

    line = initial_data(small_config, InitialDataConfig(kind="x2_independent", amplitude=0.1, width=1.0))
    np.testing.assert_allclose(line.values, line.values[:, :1] * np.ones((1, 32)))
    assert initial_data(small_config, InitialDataConfig(kind="zero")).l2_norm() == 0.0


def test_whitham_scaling():
    assert whitham_scaling(3.0) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        whitham_scaling(0.0)


def test_x2_independent_run_matches_whitham():
    config = SolverConfig(beta=1.0, n1=64, n2=8, L1=40.0, L2=40.0, dt=1e-2)
    x1 = np.arange(64) * 40.0 / 64 - 20.0
    profile = 0.05 * np.exp(-(x1**2) / 8.0)
    plane = evolve(initial_state(x2_independent(config.grid, profile), config), config, 0.5, record_every=10)
    line = whitham_run(WhithamState(profile, 40.0), config, 0.5)
    assert line.time == 0.5
    assert np.max(np.abs(reduction_profile(plane.field) - line.values)) < 1e-8


def test_whitham_step_and_kdv_reference():
    config = SolverConfig(beta=1.0, n1=64, n2=8, L1=40.0, L2=40.0, dt=1e-2)
    x1 = np.arange(128) * 40.0 / 128 - 20.0
    start = WhithamState(0.05 * np.exp(-(x1**2) / 32.0), 40.0)
    one = whitham_step(start, config)
    assert one.time == pytest.approx(1e-2)
    assert one.l2_norm() == pytest.approx(start.l2_norm(), rel=1e-8)
    line = whitham_run(start, config, 1.0)
    kdv = kdv_reference_run(start, config, 1.0)
    assert np.linalg.norm(line.values - kdv.values) / np.linalg.norm(line.values) < 1e-2


def test_whitham_state_validation():
    with pytest.raises(DomainError):
        WhithamState(np.zeros(12), 1.0)
    with pytest.raises(DomainError):
        WhithamState(np.zeros((4, 4)), 1.0)


@pytest.mark.slow
def test_dt_halving_order():
    config = SolverConfig(beta=1.0, n1=64, n2=64)
    u0 = constrained_bump(config.grid, 0.05, 0.6)
    assert observed_order(u0, config, 1.0, (0.1, 0.05), 0.0125) >= 3.0


def test_observed_order_needs_decreasing_steps(small_config, small_grid):
    u0 = constrained_bump(small_grid, 0.05, 0.6)
    with pytest.raises(DomainError):
        observed_order(u0, small_config, 0.1, (0.05, 0.1), 0.01)
    with pytest.raises(DomainError):
        observed_order(u0, small_config, 0.1, (0.1, 0.05), 0.05)
