"""
Frequency-localised kernel

    I_{Lambda,t}(x) = int e^{i x.xi + i t sgn(xi_1) m_beta(|xi|)} rho(|xi|/Lambda) dxi

evaluated radially through J_+ (kernel_radial, RadialProfile) and by direct
polar tensor quadrature over the annulus (kernel_2d), plus the stationary /
non-stationary classification of a query and the t^{-1} decay experiment.
"""

import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.optimize import minimize_scalar

from fdkp.models.errors import DomainError, OscillationBudgetError, QuadratureConvergenceError
from fdkp.models.fields import rho
from fdkp.models.geometry import KernelQuery, PlanePoint
from fdkp.models.quadrature import ComplexQuadResult
from fdkp.services import symbol
from fdkp.services.besselasym import JPlusRay, j_plus_grid
from fdkp.services.quad import composite_legendre, gauss_legendre, integrate_finite
from fdkp.services.spectral import loglog_slope
from fdkp.utils.workers import map_parallel

logger = logging.getLogger(__name__)

# oscillation budget of kernel_2d: |t| m_beta(2 Lambda) + 2 Lambda |x|
KERNEL_2D_BUDGET = 1e5
# J_+(R e) switches from the angular rule to the Laplace factors at this R
RAY_SWITCH = 16.0
# "|x| ~ critical speed * t" means within this factor
STATIONARY_FACTOR = 4.0
# half-range of the phase across one 16-point panel
PANEL_PHASE = 4.0

# bisections of the best ray against its neighbours in sup_kernel
ANGULAR_REFINEMENTS = 2


def boundary_fan(offsets: Sequence[float]) -> Tuple[PlanePoint, ...]:
    """Directions at angle pi/2 + delta, just left of the x2 axis"""
    return tuple(PlanePoint(-math.sin(delta), math.cos(delta)) for delta in offsets)


# I is even in x2 and concentrates at x1 < 0; the largest values sit in a layer
# left of the x2 axis whose angular width shrinks like t^{-1/2}, so the fan
# offsets are log-spaced
SWEEP_DIRECTIONS: Tuple[PlanePoint, ...] = (
    PlanePoint(1.0, 0.0),
    PlanePoint(1.0, 1.0),
    PlanePoint(0.0, 1.0),
    *boundary_fan((0.01, 0.02, 0.04, 0.08, 0.16, 0.32)),
    PlanePoint(-1.0, 1.0),
    PlanePoint(-1.0, 0.0),
)
QUICK_DIRECTIONS: Tuple[PlanePoint, ...] = (
    PlanePoint(0.0, 1.0),
    *boundary_fan((0.02, 0.06, 0.18)),
    PlanePoint(-1.0, 1.0),
    PlanePoint(-1.0, 0.0),
)



class Regime(str, Enum):
    NONSTATIONARY_MINUS = "nonstationary_minus"
    NONSTATIONARY_PLUS = "nonstationary_plus"
    STATIONARY = "stationary"


def _radial_panels(frequency: float) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [1/2, 1] and [1, 2], edges at the flat points of rho"""
    per_unit = max(8, math.ceil(frequency / (2.0 * PANEL_PHASE)) + 4)
    x_lo, w_lo = composite_legendre(0.5, 1.0, max(2, math.ceil(0.5 * per_unit)))
    x_hi, w_hi = composite_legendre(1.0, 2.0, max(4, per_unit))
    return np.concatenate([x_lo, x_hi]), np.concatenate([w_lo, w_hi])


class _JPlusAlongRay:
    """J_+ at R e for arrays of R: angular rule below RAY_SWITCH, Laplace factors above"""

    def __init__(self, direction: PlanePoint, r_hi: float, ray: Optional[JPlusRay] = None):
        self.unit = direction.direction()
        self.ray = ray
        if self.ray is None and r_hi > RAY_SWITCH:
            self.ray = JPlusRay(self.unit, RAY_SWITCH, r_hi)
        elif self.ray is not None and r_hi > self.ray.r_hi * (1 + 1e-12):
            raise DomainError(f"ray covers R <= {self.ray.r_hi:g}, need {r_hi:g}")

    def __call__(self, radius: np.ndarray) -> np.ndarray:
        radius = np.asarray(radius, dtype=float)
        out = np.empty(radius.shape, dtype=complex)
        small = radius < RAY_SWITCH
        if np.any(small):
            r_small = radius[small]
            out[small] = j_plus_grid(r_small * self.unit.x1, r_small * self.unit.x2)
        if np.any(~small):
            out[~small] = self.ray(radius[~small])
        return out


def kernel_radial(q: KernelQuery, tol: float = 1e-10, ray: Optional[JPlusRay] = None) -> complex:
    """2 Lambda^2 Re int_{1/2}^{2} e^{i t m(Lambda r)} J_+(Lambda r x) r rho(r) dr, adaptively in r"""
    lam, beta, t = q.Lambda, q.beta, q.t
    distance = q.x.r

    if distance == 0.0:
        def bessel(r: np.ndarray) -> np.ndarray:
            return np.full(np.shape(r), math.pi, dtype=complex)
    else:
        along = _JPlusAlongRay(q.x, 2.0 * lam * distance, ray)

        def bessel(r: np.ndarray) -> np.ndarray:
            return along(lam * distance * r)

    def integrand(r: np.ndarray) -> np.ndarray:
        phase = np.exp(1j * t * np.asarray(symbol.m(beta, lam * r)))
        return phase * bessel(r) * r * rho(r)

    value = integrate_finite(integrand, 0.5, 2.0, tol).value
    # J_- = conj(J_+) pairs the two half planes
    return complex(lam * lam * (value + np.conj(value)))


def _annulus_integral(q: KernelQuery, n_theta: int, frequency: float) -> complex:
    lam = q.Lambda
    r, wr = _radial_panels(frequency)
    nodes, weights = gauss_legendre(n_theta)
    theta = 0.5 * math.pi * nodes
    w_theta = 0.5 * math.pi * weights
    xi_abs = lam * r
    radial_weight = wr * lam * lam * r * rho(r)
    m_values = np.asarray(symbol.m(q.beta, xi_abs))
    total = 0j
    # right half plane xi_1 > 0, then the left half plane rotated by pi
    for offset, sgn in ((0.0, 1.0), (math.pi, -1.0)):
        angle = theta + offset
        dot = q.x.x1 * np.cos(angle) + q.x.x2 * np.sin(angle)
        phase = xi_abs[:, None] * dot[None, :] + sgn * q.t * m_values[:, None]
        total += np.sum(radial_weight[:, None] * w_theta[None, :] * np.exp(1j * phase))
    return complex(total)


def kernel_2d(q: KernelQuery, tol: float = 1e-8, max_refinements: int = 6) -> complex:
    """Polar tensor quadrature of the defining integral over the annulus Lambda/2 <= |xi| <= 2 Lambda.

    Refines node counts by 1.5 until two successive values agree to tol and raises
    QuadratureConvergenceError, carrying the last value, when they never do.
    """
    lam = q.Lambda
    requested = abs(q.t) * float(symbol.m(q.beta, 2.0 * lam)) + 2.0 * lam * q.x.r
    if requested > KERNEL_2D_BUDGET:
        raise OscillationBudgetError(
            f"oscillation {requested:g} exceeds the tensor quadrature budget {KERNEL_2D_BUDGET:g}",
            budget=KERNEL_2D_BUDGET,
            requested=requested,
        )
    _, v_max = symbol.group_velocity_bounds(q.beta, lam)
    frequency = abs(q.t) * lam * v_max + lam * q.x.r
    n_theta = 24 + math.ceil(1.5 * 2.0 * lam * q.x.r)
    previous = _annulus_integral(q, n_theta, frequency)
    change = math.inf
    for _ in range(max_refinements):
        n_theta = math.ceil(1.5 * n_theta)
        frequency *= 1.5
        current = _annulus_integral(q, n_theta, frequency)
        change = abs(current - previous)
        if change <= tol * max(1.0, abs(current)):
            return current
        previous = current
    nodes = 2 * n_theta * _radial_panels(frequency)[0].size
    raise QuadratureConvergenceError(
        f"tensor quadrature did not settle to tol={tol:g} after {max_refinements} refinements for {q}",
        partial=ComplexQuadResult(previous, change, nodes),
    )


def phase_regime(q: KernelQuery, component: str = "radial") -> Regime:
    """Compare |x| (or |x2| for component='transverse') with the critical speed times t"""
    if not q.t > 0:
        raise DomainError(f"phase_regime needs t > 0, got {q.t}")
    if component == "radial":
        distance = q.x.r
    elif component == "transverse":
        distance = abs(q.x.x2)
    else:
        raise DomainError(f"component must be 'radial' or 'transverse', got {component!r}")
    critical = symbol.critical_speed(q.beta, q.Lambda) * q.t
    if distance * STATIONARY_FACTOR < critical:
        return Regime.NONSTATIONARY_MINUS
    if distance > STATIONARY_FACTOR * critical:
        return Regime.NONSTATIONARY_PLUS
    return Regime.STATIONARY


def phases(q: KernelQuery, r) -> Dict[str, np.ndarray]:
    """phi^+- = m(Lambda r) +- Lambda |x| r / t and psi^+- (|x2| in place of |x|) with their r-derivatives"""
    if q.t == 0:
        raise DomainError("phase functions need t != 0")
    r = np.asarray(r, dtype=float)
    lam = q.Lambda
    base = np.asarray(symbol.m(q.beta, lam * r))
    slope = lam * np.asarray(symbol.m_prime(q.beta, lam * r))
    curvature = lam * lam * np.asarray(symbol.m_double_prime(q.beta, lam * r))
    out = {"d2": curvature}
    for name, distance in (("phi", q.x.r), ("psi", abs(q.x.x2))):
        shift = lam * distance / q.t
        out[f"{name}_plus"] = base + shift * r
        out[f"{name}_minus"] = base - shift * r
        out[f"d{name}_plus"] = slope + shift
        out[f"d{name}_minus"] = slope - shift
    return out


class RadialProfile:
    """I_{Lambda,t}(d e) for many distances d along one direction e, with a fixed radial rule"""

    def __init__(
        self,
        beta: float,
        Lambda: float,
        t: float,
        direction: PlanePoint,
        max_distance: float,
        ray: Optional[JPlusRay] = None,
    ):
        self.Lambda = Lambda
        self.unit = direction.direction()
        self.max_distance = max_distance
        _, v_max = symbol.group_velocity_bounds(beta, Lambda)
        frequency = abs(t) * Lambda * v_max + Lambda * max_distance
        self.r, weights = _radial_panels(frequency)
        phase = np.exp(1j * t * np.asarray(symbol.m(beta, Lambda * self.r)))
        self.weights = Lambda * Lambda * weights * self.r * rho(self.r) * phase
        keep = rho(self.r) > 0
        self.r, self.weights = self.r[keep], self.weights[keep]
        self.along = _JPlusAlongRay(self.unit, 2.0 * Lambda * max_distance, ray)

    def half_plane(self, distance: float) -> complex:
        """Lambda^2 int e^{itm} J_+ r rho dr, the xi_1 > 0 half of the kernel"""
        if distance == 0.0:
            return complex(math.pi * self.weights.sum())
        return complex(np.dot(self.weights, self.along(self.Lambda * distance * self.r)))

    def __call__(self, distance: float) -> float:
        return 2.0 * self.half_plane(distance).real


def _golden_max(fn, lo: float, mid: float, hi: float) -> Tuple[float, float]:
    """Maximise fn near mid; golden section on an interior bracket, bounded search at the ends"""
    if lo < mid < hi and fn(mid) >= max(fn(lo), fn(hi)):
        result = minimize_scalar(lambda d: -fn(d), bracket=(lo, mid, hi), method="golden", tol=1e-6)
    else:
        result = minimize_scalar(lambda d: -fn(d), bounds=(lo, hi), method="bounded")
    x = float(np.clip(result.x, lo, hi))
    return x, fn(x)


def sweep_radius(beta: float, Lambda: float, t: float) -> float:
    """Sweep out to three critical radii (or past the fastest group velocity)"""
    _, v_max = symbol.group_velocity_bounds(beta, Lambda)
    return abs(t) * max(3.0 * symbol.critical_speed(beta, Lambda), 1.5 * v_max)


class SupResult(BaseModel):
    value: float
    x1: float
    x2: float


def _ray_sup(profile: RadialProfile, coarse: int) -> Tuple[float, float]:
    """Largest |I| along one ray: envelope maximum, then one carrier wavelength around it"""
    max_distance = profile.max_distance
    distances = np.linspace(0.0, max_distance, coarse)
    envelope = np.array([abs(profile.half_plane(d)) for d in distances])
    k = int(np.argmax(envelope))
    lo = distances[max(k - 1, 0)]
    hi = distances[min(k + 1, coarse - 1)]
    center, _ = _golden_max(lambda d: abs(profile.half_plane(d)), lo, distances[k], hi)

    window = 2.0 * math.pi / profile.Lambda
    local = np.linspace(max(0.0, center - window), min(max_distance, center + window), 33)
    values = np.array([abs(profile(d)) for d in local])
    j = int(np.argmax(values))
    d_best, v_best = _golden_max(
        lambda d: abs(profile(d)), local[max(j - 1, 0)], local[j], local[min(j + 1, local.size - 1)]
    )
    if values[j] > v_best:
        d_best, v_best = float(local[j]), float(values[j])
    return d_best, v_best


def sup_kernel(
    beta: float,
    Lambda: float,
    t: float,
    directions: Sequence[PlanePoint] = SWEEP_DIRECTIONS,
    coarse: int = 96,
    rays: Optional[Dict[PlanePoint, JPlusRay]] = None,
    angular_refinements: int = ANGULAR_REFINEMENTS,
) -> SupResult:
    """Approximate sup_x |I_{Lambda,t}(x)| by ray sweeps.

    Each ray is sampled coarsely through the envelope |I~| of the half-plane
    integral; the envelope maximum is refined by golden section and |I| is then
    maximised over a window of one carrier wavelength around it. The best ray is
    then bisected in angle against its neighbours `angular_refinements` times.
    """
    if angular_refinements < 0:
        raise DomainError("angular_refinements must be >= 0")
    max_distance = sweep_radius(beta, Lambda, t)
    rays = rays or {}

    def at_angle(angle: float) -> Tuple[float, float, float]:
        direction = PlanePoint(math.cos(angle), math.sin(angle))
        d_best, v_best = _ray_sup(RadialProfile(beta, Lambda, t, direction, max_distance), coarse)
        return angle, d_best, v_best

    found = []
    for direction in directions:
        unit = direction.direction()
        d_best, v_best = _ray_sup(RadialProfile(beta, Lambda, t, unit, max_distance, rays.get(direction)), coarse)
        found.append((math.atan2(unit.x2, unit.x1), d_best, v_best))
    for _ in range(angular_refinements if len(found) > 1 else 0):
        found.sort()
        k = max(range(len(found)), key=lambda i: found[i][2])
        neighbours = [found[i][0] for i in (k - 1, k + 1) if 0 <= i < len(found)]
        found.extend(at_angle(0.5 * (found[k][0] + other)) for other in neighbours)

    angle, distance, value = max(found, key=lambda row: row[2])
    best = SupResult(value=value, x1=distance * math.cos(angle), x2=distance * math.sin(angle))
    logger.debug("sup |I| beta=%g Lambda=%g t=%g: %.6g at (%.4g, %.4g)", beta, Lambda, t, best.value, best.x1, best.x2)
    return best


def decay_time_window(beta: float, Lambda: float, t_min: float = 10.0, t_max: float = 1e3, points: int = 7) -> np.ndarray:
    """Log-spaced times in [t_min, t_max] stretched by the dispersion time when it exceeds 1"""
    scale = max(1.0, symbol.dispersion_time(beta, Lambda))
    return np.geomspace(t_min * scale, t_max * scale, points)


class DecaySummary(BaseModel):
    beta: float
    Lambda: float
    slope: float
    constant: float
    predicted_weight: float


def decay_experiment(
    beta: float,
    lambdas: Sequence[float],
    t_lists: Dict[float, Sequence[float]],
    directions: Sequence[PlanePoint] = SWEEP_DIRECTIONS,
    coarse: int = 96,
) -> Tuple[pd.DataFrame, List[DecaySummary]]:
    """sup_x |I_{Lambda,t}| against t for each Lambda, with the fitted log-log slope.

    Rows carry Lambda, t, sup_abs_I, predicted = weight / t and ratio = sup / predicted;
    the per-Lambda constant is the largest ratio.
    """
    rows = []
    summaries: List[DecaySummary] = []
    for lam in lambdas:
        times = [float(t) for t in t_lists[lam]]
        if any(t <= 0 for t in times):
            raise DomainError("decay times must be positive")
        r_hi = 2.0 * lam * sweep_radius(beta, lam, max(times))
        rays = {}
        if r_hi > RAY_SWITCH:
            rays = dict(zip(directions, map_parallel(lambda d: JPlusRay(d, RAY_SWITCH, r_hi), list(directions))))
        sups = map_parallel(lambda t: sup_kernel(beta, lam, t, directions, coarse, rays).value, times)
        weight = symbol.dispersive_weight(beta, lam)
        for t, sup in zip(times, sups):
            rows.append({"Lambda": lam, "t": t, "sup_abs_I": sup, "predicted": weight / t, "ratio": sup * t / weight})
        summaries.append(
            DecaySummary(
                beta=beta,
                Lambda=lam,
                slope=loglog_slope(times, sups),
                constant=max(s * t / weight for t, s in zip(times, sups)),
                predicted_weight=weight,
            )
        )
        logger.info("decay beta=%g Lambda=%g: slope %.3f", beta, lam, summaries[-1].slope)
    return pd.DataFrame(rows), summaries
