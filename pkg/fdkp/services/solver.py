"""
Pseudo-spectral evolution of

    u_t + i sgn(D_1) m_beta(|D|) u + kappa d_x1(u^2) = 0

on a doubly periodic grid, its 1-D Whitham reduction and a KdV reference.

The linear part is integrated exactly by exponential time differencing
(ETDRK4, phi-functions averaged over a contour for small arguments) or by the
integrating-factor RK4 scheme; the quadratic term is formed in physical space
with the 2/3 rule.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.fft

from fdkp.models.errors import BlowUpError, DomainError
from fdkp.models.fields import GridSpec
from fdkp.models.solver import LedgerEntry, SolverConfig
from fdkp.services import symbol
from fdkp.services.spectral import (
    SpectralField2D,
    column_weights,
    forward,
    high_pass,
    integer_modes,
    inverse,
    periodic_offsets,
    propagate_linear,
    sign_xi1,
    wavenumbers,
)
from fdkp.utils.config import InitialDataConfig, get_settings

logger = logging.getLogger(__name__)

# phi-functions come from the contour mean below this |h L|
SMALL_Z = 0.5
# relative size of the xi_1 = 0 column above which the Hamiltonian is unavailable
CONSTRAINT_TOL = 1e-10

Coefficients = np.ndarray


def _phi_closed(z: np.ndarray) -> Tuple[np.ndarray, ...]:
    ez = np.exp(z)
    z3 = z**3
    return (
        (np.exp(0.5 * z) - 1.0) / z,
        (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3,
        (2.0 + z + ez * (z - 2.0)) / z3,
        (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3,
    )


def etd_coefficients(z: np.ndarray, contour_points: int = 32) -> Tuple[np.ndarray, ...]:
    """Q, f1, f2, f3 of ETDRK4 divided by h, for z = h L (complex, any shape)"""
    z = np.asarray(z, dtype=complex)
    out = [np.empty_like(z) for _ in range(4)]
    small = np.abs(z) < SMALL_Z
    if np.any(~small):
        for target, value in zip(out, _phi_closed(z[~small])):
            target[~small] = value
    if np.any(small):
        zs = z[small]
        acc = [np.zeros_like(zs) for _ in range(4)]
        for j in range(contour_points):
            shifted = zs + np.exp(2j * math.pi * (j + 0.5) / contour_points)
            for k, value in enumerate(_phi_closed(shifted)):
                acc[k] += value
        for target, value in zip(out, acc):
            target[small] = value / contour_points
    return tuple(out)


class ExponentialIntegrator:
    """One step of v_t = L v + N(v) for a diagonal L"""

    def __init__(
        self,
        linear: np.ndarray,
        nonlinear: Callable[[Coefficients], Coefficients],
        h: float,
        scheme: str = "etdrk4",
        contour_points: int = 32,
    ):
        if not (h > 0 and math.isfinite(h)):
            raise DomainError(f"time step must be positive, got {h}")
        self.nonlinear = nonlinear
        self.h = h
        self.scheme = scheme
        z = h * np.asarray(linear, dtype=complex)
        self.E = np.exp(z)
        self.E2 = np.exp(0.5 * z)
        if scheme == "etdrk4":
            q, f1, f2, f3 = etd_coefficients(z, contour_points)
            self.Q, self.f1, self.f2, self.f3 = h * q, h * f1, h * f2, h * f3
        elif scheme != "ifrk4":
            raise DomainError(f"unknown scheme {scheme!r}")

    def advance(self, v: Coefficients) -> Coefficients:
        N, h = self.nonlinear, self.h
        E, E2 = self.E, self.E2
        Nv = N(v)
        if self.scheme == "etdrk4":
            Q = self.Q
            a = E2 * v + Q * Nv
            Na = N(a)
            b = E2 * v + Q * Na
            Nb = N(b)
            c = E2 * a + Q * (2.0 * Nb - Nv)
            Nc = N(c)
            return E * v + self.f1 * Nv + 2.0 * self.f2 * (Na + Nb) + self.f3 * Nc
        a = E2 * (v + 0.5 * h * Nv)
        Na = N(a)
        b = E2 * v + 0.5 * h * Na
        Nb = N(b)
        c = E * v + h * E2 * Nb
        Nc = N(c)
        return E * v + (h / 6.0) * (E * Nv + 2.0 * E2 * (Na + Nb) + Nc)


def dealias_mask(grid: GridSpec, rule: str) -> np.ndarray:
    """Boolean mask of retained half-spectrum modes: 3|k1| < n1 and 3|k2| < n2 for the 2/3 rule"""
    k1, k2 = integer_modes(grid)
    if rule == "none":
        return np.ones((grid.n1 // 2 + 1, grid.n2), dtype=bool)
    return (3 * np.abs(k1) < grid.n1) & (3 * np.abs(k2) < grid.n2)


class PseudoSpectralSolver:
    """Multipliers and integrator for one (config, step size)"""

    def __init__(self, config: SolverConfig, h: Optional[float] = None):
        self.config = config
        self.grid = config.grid
        self.h = config.dt if h is None else h
        xi1, xi2 = wavenumbers(self.grid)
        sgn = sign_xi1(self.grid)
        self.mask = dealias_mask(self.grid, config.dealias)
        # d_x1 drops the Nyquist column like the spectral gradient
        self.dx1 = 1j * np.where(sgn == 0, 0.0, xi1) * np.ones_like(xi2)
        self.linear = -1j * sgn * np.asarray(symbol.m(config.beta, np.hypot(xi1, xi2)))
        self.integrator = ExponentialIntegrator(
            self.linear, self.nonlinear, self.h, config.scheme, config.contour_points
        )

    def product(self, v: Coefficients, w: Optional[Coefficients] = None) -> Coefficients:
        """Dealiased coefficients of u * w"""
        u = inverse(v, self.grid)
        other = u if w is None else inverse(w, self.grid)
        return self.mask * forward(u * other)

    def nonlinear(self, v: Coefficients) -> Coefficients:
        """-kappa d_x1 P(u^2)"""
        return -self.config.kappa * self.dx1 * self.product(v)

    def advance(self, v: Coefficients) -> Coefficients:
        return self.integrator.advance(self.mask * v)


@lru_cache(maxsize=32)
def solver_for(config: SolverConfig, h: Optional[float] = None) -> PseudoSpectralSolver:
    return PseudoSpectralSolver(config, h)


def dealiased_product(f: SpectralField2D, g: SpectralField2D, config: SolverConfig) -> SpectralField2D:
    """P(f g) with the configured dealiasing rule"""
    f.grid.require_same(g.grid)
    config.grid.require_same(f.grid)
    return f.with_coefficients(solver_for(config).product(f.coefficients, g.coefficients))


def dealias(f: SpectralField2D, config: SolverConfig) -> SpectralField2D:
    return f.with_coefficients(solver_for(config).mask * f.coefficients)


def forcing(f: SpectralField2D, config: SolverConfig) -> SpectralField2D:
    """F = -kappa d_x1 P(u^2)"""
    return f.with_coefficients(solver_for(config).nonlinear(f.coefficients))


@dataclass(frozen=True)
class EvolutionState:
    field: SpectralField2D
    time: float = 0.0
    dt: float = 1e-2
    ledger: Tuple[LedgerEntry, ...] = ()

    def __post_init__(self):
        if not (self.time >= 0 and math.isfinite(self.time)):
            raise DomainError(f"time must be finite and non-negative, got {self.time}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        times = [entry.time for entry in self.ledger]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("ledger times must be strictly increasing")
        object.__setattr__(self, "ledger", tuple(self.ledger))

    def recorded(self, entry: LedgerEntry) -> "EvolutionState":
        if not entry.is_finite():
            raise DomainError(f"non-finite ledger entry at t={entry.time}")
        return replace(self, ledger=self.ledger + (entry,))


def step(state: EvolutionState, config: SolverConfig) -> EvolutionState:
    """One time step of size state.dt"""
    config.grid.require_same(state.field.grid)
    solver = solver_for(config, state.dt if state.dt != config.dt else None)
    v = solver.advance(state.field.coefficients)
    values = inverse(v, state.field.grid)
    if not np.all(np.isfinite(values)):
        raise BlowUpError(f"non-finite field at t={state.time + state.dt:g}", last_good_state=state, time=state.time)
    return replace(state, field=SpectralField2D(state.field.grid, values), time=state.time + state.dt)


def hamiltonian(f: SpectralField2D, config: SolverConfig) -> Optional[float]:
    """1/2 sum (m/|xi_1|) |u_hat|^2 L1 L2 + (kappa/3) int u^3, None when the xi_1 = 0 column is not negligible"""
    c = f.coefficients
    weights = column_weights(f.grid)
    total = float(np.sum(weights * np.abs(c) ** 2))
    if total == 0.0:
        return 0.0
    if float(np.sum(np.abs(c[0]) ** 2)) > (CONSTRAINT_TOL**2) * total:
        return None
    xi1, xi2 = wavenumbers(f.grid)
    ratio = np.zeros_like(c, dtype=float)
    m_values = np.asarray(symbol.m(config.beta, np.hypot(xi1, xi2)))
    ratio[1:] = (m_values / np.where(xi1 == 0, 1.0, xi1))[1:]
    quadratic = 0.5 * f.L1 * f.L2 * float(np.sum(weights * ratio * np.abs(c) ** 2))
    cubic = config.hamiltonian_cubic_coefficient * f.grid.cell_area * float(np.sum(f.values**3))
    return quadratic + cubic


def conserved_quantities(state: EvolutionState, config: SolverConfig) -> Tuple[float, Optional[float]]:
    """(L^2 norm, Hamiltonian or None when the zero-mass constraint fails)"""
    return state.field.l2_norm(), hamiltonian(state.field, config)


def ledger_entry(f: SpectralField2D, time: float, config: SolverConfig) -> LedgerEntry:
    return LedgerEntry(
        time=time,
        l2=f.l2_norm(),
        hamiltonian=hamiltonian(f, config),
        grad_sup=f.gradient_sup(),
        hs_norm=f.sobolev_norm(config.s),
        grad_high_sup=high_pass(f, 1.0).gradient_sup(),
        forcing_norm=forcing(f, config).sobolev_norm(config.s - 1.0),
    )


def evolve(
    state: EvolutionState,
    config: SolverConfig,
    t_final: float,
    record_every: int = 1,
    on_record: Optional[Callable[[EvolutionState], None]] = None,
) -> EvolutionState:
    """Step to t_final, recording a ledger entry every `record_every` steps and at the end.

    The step is shrunk so the run lands on t_final exactly. Raises BlowUpError
    carrying the last recorded state on NaN or on growth past blowup_factor.
    """
    if not (t_final >= state.time and math.isfinite(t_final)):
        raise DomainError(f"t_final must be finite and >= {state.time}, got {t_final}")
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    config.grid.require_same(state.field.grid)

    span = t_final - state.time
    n_steps = max(0, math.ceil(span / config.dt - 1e-9))
    h = span / n_steps if n_steps else config.dt
    solver = solver_for(config, None if abs(h - config.dt) <= 1e-15 * config.dt else h)

    state = replace(state, field=dealias(state.field, config), dt=h)
    if not state.ledger:
        state = state.recorded(ledger_entry(state.field, state.time, config))
    limit = config.blowup_factor * max(state.field.lp_norm(math.inf), np.finfo(float).tiny)
    logger.info("evolve %d steps of %.3g to t=%g (%s, beta=%g)", n_steps, h, t_final, config.scheme, config.beta)

    last_good = state
    v = state.field.coefficients
    grid = state.field.grid
    for k in range(1, n_steps + 1):
        v = solver.advance(v)
        time = state.time + k * h if k < n_steps else t_final
        if k % record_every and k != n_steps:
            continue
        values = inverse(v, grid)
        sup = float(np.max(np.abs(values))) if np.all(np.isfinite(values)) else math.inf
        if sup > limit:
            logger.warning("blow-up at t=%g (sup %.3g)", time, sup)
            raise BlowUpError(f"solution left the admissible range at t={time:g}", last_good_state=last_good, time=time)
        field = SpectralField2D(grid, values)
        # irfft2 projected the self-conjugate columns; keep integrating the symmetrised coefficients
        v = field.coefficients
        last_good = replace(last_good, field=field, time=time).recorded(ledger_entry(field, time, config))
        logger.debug("t=%.4g l2=%.12g", time, last_good.ledger[-1].l2)
        if on_record is not None:
            on_record(last_good)
    return last_good


def initial_state(field: SpectralField2D, config: SolverConfig) -> EvolutionState:
    return EvolutionState(field=field, time=0.0, dt=config.dt)


def observed_order(
    u0: SpectralField2D,
    config: SolverConfig,
    t_final: float,
    dt_pair: Tuple[float, float],
    reference_dt: float,
) -> float:
    """log2 of the error ratio at two step sizes, errors taken against a run at reference_dt"""
    coarse_dt, fine_dt = dt_pair
    if not (reference_dt < fine_dt < coarse_dt):
        raise DomainError(f"need reference_dt < fine < coarse, got {reference_dt}, {dt_pair}")
    finals = []
    for dt in (coarse_dt, fine_dt, reference_dt):
        run_config = config.model_copy(update={"dt": dt})
        finals.append(evolve(initial_state(u0, run_config), run_config, t_final, record_every=10**9).field)
    coarse, fine, reference = finals
    e_coarse = (coarse - reference).l2_norm()
    e_fine = (fine - reference).l2_norm()
    logger.info("dt-halving errors %.3e, %.3e", e_coarse, e_fine)
    return math.log2(e_coarse / e_fine) if e_fine > 0 else math.inf



def gaussian_bump(grid: GridSpec, amplitude: float, width: float, width2: Optional[float] = None) -> SpectralField2D:
    """amplitude * exp(-x1^2/(2 w^2) - x2^2/(2 w2^2)) centred in the box"""
    width2 = width if width2 is None else width2
    if width <= 0 or width2 <= 0:
        raise DomainError("widths must be positive")
    d1, d2 = periodic_offsets(grid, (0.5 * grid.L1, 0.5 * grid.L2))
    return SpectralField2D(grid, amplitude * np.exp(-(d1**2) / (2 * width**2) - d2**2 / (2 * width2**2)))


def constrained_bump(grid: GridSpec, amplitude: float, width: float, width2: Optional[float] = None) -> SpectralField2D:
    """Spectral d_x1 of a Gaussian, scaled to peak `amplitude`; the xi_1 = 0 column is exactly zero"""
    base = gaussian_bump(grid, 1.0, width, width2)
    xi1, _ = wavenumbers(grid)
    k1 = np.where(sign_xi1(grid) == 0, 0.0, xi1)
    derivative = base.with_coefficients(1j * k1 * base.coefficients)
    peak = derivative.lp_norm(math.inf)
    if peak == 0:
        raise DomainError("width too large for the grid: derivative vanishes")
    return derivative.scaled(amplitude / peak)


def rough_data(grid: GridSpec, s: float, epsilon: float, amplitude: float, seed: int = 0) -> SpectralField2D:
    """Random-phase data with |u_hat(xi)| ~ |xi|^{-s-1-epsilon}, zero on xi_1 = 0, L^2 norm `amplitude`"""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    rng = np.random.default_rng(seed)
    xi1, xi2 = wavenumbers(grid)
    abs_xi = np.hypot(xi1, xi2)
    modulus = np.where(abs_xi > 0, np.power(np.where(abs_xi > 0, abs_xi, 1.0), -s - 1.0 - epsilon), 0.0)
    phases = np.exp(2j * math.pi * rng.random(modulus.shape))
    coefficients = modulus * phases
    coefficients[0] = 0.0
    coefficients[-1] = 0.0
    field = SpectralField2D.from_coefficients(grid, coefficients)
    return field.scaled(amplitude / field.l2_norm())


def x2_independent(grid: GridSpec, profile: np.ndarray) -> SpectralField2D:
    """Extend a 1-D profile in x1 constantly in x2"""
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (grid.n1,):
        raise DomainError(f"profile has shape {profile.shape}, expected ({grid.n1},)")
    return SpectralField2D(grid, np.repeat(profile[:, None], grid.n2, axis=1))


def initial_data(config: SolverConfig, initial: InitialDataConfig) -> SpectralField2D:
    grid = config.grid
    if initial.kind == "zero":
        return SpectralField2D.zeros(grid)
    if initial.kind == "gaussian":
        return gaussian_bump(grid, initial.amplitude, initial.width, initial.width2)
    if initial.kind == "constrained":
        return constrained_bump(grid, initial.amplitude, initial.width, initial.width2)
    if initial.kind == "rough":
        return rough_data(grid, initial.sobolev, initial.epsilon, initial.amplitude, initial.seed)
    x1 = np.arange(grid.n1) * grid.L1 / grid.n1 - 0.5 * grid.L1
    return x2_independent(grid, initial.amplitude * np.exp(-(x1**2) / (2 * initial.width**2)))


@dataclass(frozen=True)
class WhithamState:
    """A 1-D periodic field on [0, L) at a given time"""

    values: np.ndarray
    L: float
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 1 or values.size < 2 or values.size & (values.size - 1):
            raise DomainError("Whitham profiles must be 1-D with a power-of-two length")
        if not np.all(np.isfinite(values)):
            raise DomainError("Whitham profile must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    def l2_norm(self) -> float:
        return math.sqrt(self.L / self.n * float(np.sum(self.values**2)))


class WhithamSolver:
    """1-D analogue of PseudoSpectralSolver with a pluggable dispersion r -> m(r)"""

    def __init__(self, config: SolverConfig, n: int, L: float, h: float, dispersion: Optional[Callable] = None):
        self.n, self.L, self.config = n, L, config
        workers = get_settings().threads
        self._forward = lambda u: scipy.fft.rfft(u, norm="forward", workers=workers)
        self._inverse = lambda v: scipy.fft.irfft(v, n=n, norm="forward", workers=workers)
        xi = 2.0 * math.pi * scipy.fft.rfftfreq(n, d=L / n)
        sgn = np.ones_like(xi)
        sgn[0] = sgn[-1] = 0.0
        dispersion = dispersion or (lambda r: symbol.m(config.beta, r))
        k = np.arange(xi.size)
        self.mask = (3 * k < n) if config.dealias == "two-thirds" else np.ones(xi.size, dtype=bool)
        self.dx = 1j * sgn * xi
        linear = -1j * sgn * np.asarray(dispersion(xi))
        self.integrator = ExponentialIntegrator(linear, self.nonlinear, h, config.scheme, config.contour_points)

    def nonlinear(self, v: np.ndarray) -> np.ndarray:
        u = self._inverse(v)
        return -self.config.kappa * self.dx * self.mask * self._forward(u * u)

    def run(self, state: WhithamState, steps: int) -> WhithamState:
        v = self.mask * self._forward(state.values)
        for _ in range(steps):
            v = self.integrator.advance(v)
        values = self._inverse(v)
        if not np.all(np.isfinite(values)):
            raise BlowUpError("non-finite Whitham profile", last_good_state=state, time=state.time)
        return WhithamState(values, state.L, state.time + steps * self.integrator.h)


def whitham_step(state: WhithamState, config: SolverConfig, dispersion: Optional[Callable] = None) -> WhithamState:
    """One step of u_t + i sgn(D) m(|D|) u + kappa d_x(u^2) = 0"""
    return WhithamSolver(config, state.n, state.L, config.dt, dispersion).run(state, 1)


def whitham_run(
    state: WhithamState,
    config: SolverConfig,
    t_final: float,
    dispersion: Optional[Callable] = None,
) -> WhithamState:
    span = t_final - state.time
    if span < 0 or not math.isfinite(span):
        raise DomainError(f"t_final must be finite and >= {state.time}")
    n_steps = max(0, math.ceil(span / config.dt - 1e-9))
    if n_steps == 0:
        return state
    solver = WhithamSolver(config, state.n, state.L, span / n_steps, dispersion)
    result = solver.run(state, n_steps)
    return replace(result, time=t_final)


def kdv_reference_run(state: WhithamState, config: SolverConfig, t_final: float) -> WhithamState:
    """Same integrator with the long-wave dispersion r + (beta/2 - 1/6) r^3"""
    return whitham_run(state, config, t_final, dispersion=lambda r: symbol.m_kdv(config.beta, r))


def whitham_scaling(kappa: float, whitham_coefficient: float = 0.75) -> float:
    """Factor c with u = c w, mapping w_t + ... + whitham_coefficient d_x(w^2) = 0 onto the kappa form"""
    if kappa == 0:
        raise DomainError("kappa must be non-zero to rescale")
    return whitham_coefficient / kappa


def reduction_profile(field: SpectralField2D) -> np.ndarray:
    """The x1 profile of an x2-independent field (column mean)"""
    return np.asarray(field.values).mean(axis=1)


def linear_flow(field: SpectralField2D, beta: float, t: float) -> SpectralField2D:
    """Exact free flow of the solver's linear part over time t"""
    return propagate_linear(field, beta, -t)
