"""
Well-posedness phenomenology on top of the solver: the energy inequality and
refined Strichartz quantity read off a ledger, Gronwall-type L^2 stability of
twin runs, and Bona-Smith convergence of low-pass regularised data.
"""

import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.integrate import cumulative_trapezoid, trapezoid

from fdkp.models.errors import DomainError
from fdkp.models.solver import LedgerEntry, SolverConfig
from fdkp.services.solver import EvolutionState, dealias, evolve, initial_state
from fdkp.services.spectral import SpectralField2D, loglog_slope, low_pass
from fdkp.utils.workers import map_parallel

logger = logging.getLogger(__name__)


def _time_integral(times: np.ndarray, values: np.ndarray) -> float:
    if times.size < 2:
        return 0.0
    return float(trapezoid(values, times))


class EnergyReport(BaseModel):
    s: float
    T: float
    hs_initial: float
    hs_max: float
    gradient_integral: float
    implied_c: float
    strichartz_lhs: float
    strichartz_rhs: float
    strichartz_ratio: float


def energy_monitor(ledger: Sequence[LedgerEntry], s: float) -> EnergyReport:
    """Solve ||u||^2_{L^inf H^s} <= ||u0||^2_{H^s} + c K ||u||^2_{L^inf H^s} for c, K = int ||grad u||_inf.

    Also compares ||grad P_{>1} u||_{L^2_T L^inf} with
    T^{1/2} ||J^s u||_{L^inf_T L^2} + ||J^{s-1} F||_{L^2_T L^2}.
    """
    if s <= 1:
        raise DomainError(f"energy monitor needs s > 1, got {s}")
    if not ledger:
        raise DomainError("empty ledger")
    times = np.array([e.time for e in ledger])
    hs = np.array([e.hs_norm for e in ledger])
    T = float(times[-1] - times[0])
    K = _time_integral(times, np.array([e.grad_sup for e in ledger]))
    hs0, hs_max = float(hs[0]), float(hs.max())
    implied_c = 0.0
    if K > 0 and hs_max > 0:
        implied_c = (hs_max**2 - hs0**2) / (K * hs_max**2)

    lhs = math.sqrt(_time_integral(times, np.array([e.grad_high_sup for e in ledger]) ** 2))
    forcing = math.sqrt(_time_integral(times, np.array([e.forcing_norm for e in ledger]) ** 2))
    rhs = math.sqrt(T) * hs_max + forcing
    return EnergyReport(
        s=s,
        T=T,
        hs_initial=hs0,
        hs_max=hs_max,
        gradient_integral=K,
        implied_c=implied_c,
        strichartz_lhs=lhs,
        strichartz_rhs=rhs,
        strichartz_ratio=lhs / rhs if rhs > 0 else 0.0,
    )


def hs_growth_time(ledger: Sequence[LedgerEntry], factor: float = 2.0) -> float:
    """First time ||J^s u|| reaches factor times its initial value (linear interpolation), inf if never"""
    if not ledger:
        raise DomainError("empty ledger")
    target = factor * ledger[0].hs_norm
    for before, after in zip(ledger, ledger[1:]):
        if after.hs_norm >= target:
            span = after.hs_norm - before.hs_norm
            weight = (target - before.hs_norm) / span if span > 0 else 1.0
            return before.time + weight * (after.time - before.time)
    return math.inf


def _recorded_run(
    field: SpectralField2D, config: SolverConfig, T: float, record_every: int
) -> Tuple[EvolutionState, List[SpectralField2D]]:
    snapshots: List[SpectralField2D] = []
    start = initial_state(dealias(field, config), config)
    snapshots.append(start.field)
    final = evolve(start, config, T, record_every, on_record=lambda st: snapshots.append(st.field))
    return final, snapshots


class TwinRunReport(BaseModel):
    T: float
    initial_difference: float
    sup_difference: float
    ratio: float
    gradient_integral: float
    fitted_c: float
    gronwall_bound: float
    times: List[float]
    ratios: List[float]
    gradient_integrals: List[float]

    def excess_over(self, c: float) -> float:
        """max_t ratio(t) / exp(c K(t)); at most 1 when c bounds this run"""
        return max(r / (math.exp(c * k) if k > 0 else 1.0) for r, k in zip(self.ratios, self.gradient_integrals))


def _running_integral(ledger: Sequence[LedgerEntry]) -> np.ndarray:
    """K(t) = int_0^t ||grad u||_inf at every ledger time"""
    times = np.array([e.time for e in ledger])
    grads = np.array([e.grad_sup for e in ledger])
    if times.size < 2:
        return np.zeros(times.size)
    return np.concatenate([[0.0], cumulative_trapezoid(grads, times)])


def fit_gronwall_c(ratios: Sequence[float], gradient_integrals: Sequence[float]) -> float:
    """Smallest c >= 0 with ratio(t) <= exp(c K(t)) at every recorded time"""
    fitted = 0.0
    for ratio, k in zip(ratios, gradient_integrals):
        if ratio > 1.0:
            if k <= 0:
                return math.inf
            fitted = max(fitted, math.log(ratio) / k)
    return fitted


def twin_run_l2_stability(
    u0_a: SpectralField2D,
    u0_b: SpectralField2D,
    config: SolverConfig,
    T: float,
    record_every: int = 1,
) -> TwinRunReport:
    """||u_a - u_b||_2 / ||u0_a - u0_b||_2 along the run and the Gronwall constant fitted to it.

    K(t) is the larger of the two runs' int_0^t ||grad u||_inf; the fitted c
    is the smallest one for which exp(c K(t)) bounds the ratio at every
    recorded time, so it can be checked against a run at another step size.
    """
    u0_a.grid.require_same(u0_b.grid)
    runs = map_parallel(lambda f: _recorded_run(f, config, T, record_every), [u0_a, u0_b])
    (state_a, fields_a), (state_b, fields_b) = runs
    times = [e.time for e in state_a.ledger]
    differences = [(fa - fb).l2_norm() for fa, fb in zip(fields_a, fields_b)]
    initial = differences[0]
    if initial == 0.0:
        ratios = [1.0 for _ in differences]
    else:
        ratios = [d / initial for d in differences]
    ratio = max(ratios)

    K_t = np.maximum(_running_integral(state_a.ledger), _running_integral(state_b.ledger))
    K = float(K_t[-1]) if K_t.size else 0.0
    fitted_c = fit_gronwall_c(ratios, K_t)
    logger.info("twin run T=%g: ratio %.6g, K %.4g, fitted c %.4g", T, ratio, K, fitted_c)
    return TwinRunReport(
        T=T,
        initial_difference=initial,
        sup_difference=max(differences),
        ratio=ratio,
        gradient_integral=K,
        fitted_c=fitted_c,
        gronwall_bound=math.exp(fitted_c * K),
        times=times,
        ratios=ratios,
        gradient_integrals=[float(k) for k in K_t],
    )


def perturbation_halving(
    u0: SpectralField2D,
    perturbation: SpectralField2D,
    config: SolverConfig,
    T: float,
    record_every: int = 1,
) -> float:
    """sup_t ||u_a - u_b||_2 with the perturbation halved, over the same with it in full (1/2 when linear)"""
    full, half = map_parallel(
        lambda p: twin_run_l2_stability(u0, u0 + p, config, T, record_every),
        [perturbation, perturbation.scaled(0.5)],
    )
    if full.sup_difference == 0.0:
        raise DomainError("the perturbation vanishes on the grid")
    return half.sup_difference / full.sup_difference


class BonaSmithPair(BaseModel):
    n: float
    m: float
    differences: Dict[str, float]
    scaled: Dict[str, float]


class BonaSmithReport(BaseModel):
    s: float
    sigmas: List[float]
    pairs: List[BonaSmithPair]
    base_sigma: float
    monotone: bool
    scaled_non_increasing: Dict[str, bool]
    rate: float
    rate_consistent: bool


def bona_smith_convergence(
    u0: SpectralField2D,
    s: float,
    n_list: Sequence[float],
    config: SolverConfig,
    T: float,
    sigmas: Sequence[float] = (0.0,),
    record_every: int = 1,
    slack: float = 0.05,
    rate_tolerance: float = 0.3,
) -> BonaSmithReport:
    """Run from P_{<=n} u0 for each n and measure ||u_n - u_m||_{L^inf_T H^sigma} along consecutive n.

    `slack` is the relative increase tolerated by the monotonicity checks. The
    Cauchy rate and `monotone` are read off the series of the first sigma.
    """
    levels = [float(n) for n in n_list]
    if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError("n_list must be increasing with at least two entries")
    if any(sigma >= s for sigma in sigmas):
        raise DomainError("every sigma must be below s")

    runs = map_parallel(lambda n: _recorded_run(low_pass(u0, n), config, T, record_every)[1], levels)
    pairs: List[BonaSmithPair] = []
    for (n, fields_n), (m, fields_m) in zip(zip(levels, runs), zip(levels[1:], runs[1:])):
        differences = {}
        scaled = {}
        for sigma in sigmas:
            key = f"{sigma:g}"
            differences[key] = max((a - b).sobolev_norm(sigma) for a, b in zip(fields_n, fields_m))
            scaled[key] = differences[key] * n ** (s - sigma)
        pairs.append(BonaSmithPair(n=n, m=m, differences=differences, scaled=scaled))

    base_sigma = float(sigmas[0])
    base_series = [p.differences[f"{base_sigma:g}"] for p in pairs]
    monotone = all(b <= a * (1.0 + slack) for a, b in zip(base_series, base_series[1:]))
    scaled_non_increasing = {
        f"{sigma:g}": all(
            b.scaled[f"{sigma:g}"] <= a.scaled[f"{sigma:g}"] * (1.0 + slack) for a, b in zip(pairs, pairs[1:])
        )
        for sigma in sigmas
    }
    rate = -loglog_slope([p.n for p in pairs], base_series) + base_sigma if len(pairs) >= 2 else math.nan
    logger.info("bona-smith s=%g: rate %.3f over n=%s", s, rate, levels)
    return BonaSmithReport(
        s=s,
        sigmas=list(sigmas),
        pairs=pairs,
        base_sigma=base_sigma,
        monotone=monotone,
        scaled_non_increasing=scaled_non_increasing,
        rate=rate,
        rate_consistent=bool(abs(rate - s) <= rate_tolerance),
    )
