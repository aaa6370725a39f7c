"""
Asymmetric Bessel function J_+(x) = int_{-pi/2}^{pi/2} e^{i x.(cos t, sin t)} dt
and its decomposition into the arcsine integrals F, F^+- and the Laplace
integrals f_a^+-.

With R = |x|, a = |x2|/|x| and s1 = sgn(x1):

    J_+(x)     = F(R, a) + F^{s1}(R, a)
    F(R, a)    = e^{iaR} f_a^+(R) + e^{-iaR} f_a^-(R)
    F^+-(R, a) = 2 e^{+-iR} f_1^+-(R) - 2 e^{+-iaR} f_a^+-(R)
    f_a^+-(R)  = -+i int_0^inf e^{-Rs} (s^2 + 1 - a^2 -+ 2ais)^{-1/2} ds

J_-(x) = conj(J_+(x)) and J_+ + J_- = 2 pi J_0(|x|).
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.interpolate import CubicSpline
from scipy.special import jv

from fdkp.models.errors import DomainError, OscillationBudgetError
from fdkp.models.geometry import PlanePoint
from fdkp.services.quad import (
    gauss_legendre,
    integrate_arcsine,
    integrate_finite,
    integrate_laplace,
)
from fdkp.utils.workers import map_parallel

logger = logging.getLogger(__name__)

# largest |x| accepted by the direct angular quadrature
DIRECT_BUDGET = 1e5
# f_a^+- representations are only evaluated for r above this
MIN_LAPLACE_R = 1e-3
DEFAULT_TOL = 1e-11


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    return sign


def _check_a(a: float) -> float:
    a = float(a)
    if not (0.0 <= a <= 1.0):
        # for a outside [0, 1] the radicand can cross the principal branch cut
        raise DomainError(f"a must lie in [0, 1], got {a}")
    return a


def j_plus_direct(x: PlanePoint, tol: float = DEFAULT_TOL) -> complex:
    """Adaptive angular quadrature of the defining integral"""
    if x.r > DIRECT_BUDGET:
        raise OscillationBudgetError(
            f"|x| = {x.r:g} exceeds the direct quadrature budget {DIRECT_BUDGET:g}",
            budget=DIRECT_BUDGET,
            requested=x.r,
        )
    x1, x2 = x.x1, x.x2
    result = integrate_finite(
        lambda theta: np.exp(1j * (x1 * np.cos(theta) + x2 * np.sin(theta))),
        -0.5 * math.pi,
        0.5 * math.pi,
        tol,
    )
    return result.value


def j_plus_series(x1, x2, terms: Optional[int] = None):
    """Neumann series pi J_0(R) + 4i sum_k J_{2k+1}(R) cos((2k+1) alpha) / (2k+1).

    Vectorised over x1, x2; used as an independent oracle.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    radius = np.hypot(x1, x2)
    alpha = np.arctan2(x2, x1)
    if terms is None:
        terms = int(np.max(radius, initial=0.0)) + 40
    orders = 2 * np.arange(terms) + 1
    shape = radius.shape
    radius_flat = radius.reshape(-1, 1)
    alpha_flat = alpha.reshape(-1, 1)
    odd = jv(orders[None, :], radius_flat) * np.cos(orders[None, :] * alpha_flat) / orders[None, :]
    value = math.pi * jv(0, radius_flat[:, 0]) + 4j * odd.sum(axis=1)
    value = value.reshape(shape)
    if value.ndim == 0:
        return complex(value)
    return value


def _angular_nodes(radius_max: float) -> int:
    return 24 + int(math.ceil(1.5 * radius_max))


def j_plus_grid(x1, x2, chunk: int = 4096) -> np.ndarray:
    """Fixed Gauss-Legendre angular rule for J_+ at arrays of points.

    The node count grows with max |x|, so this is meant for moderate arguments.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x1, x2 = np.broadcast_arrays(x1, x2)
    shape = x1.shape
    flat1 = x1.ravel()
    flat2 = x2.ravel()
    radius_max = float(np.max(np.hypot(flat1, flat2), initial=0.0))
    if radius_max > DIRECT_BUDGET:
        raise OscillationBudgetError(
            f"|x| = {radius_max:g} exceeds the angular rule budget",
            budget=DIRECT_BUDGET,
            requested=radius_max,
        )
    nodes, weights = gauss_legendre(_angular_nodes(radius_max))
    theta = 0.5 * math.pi * nodes
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    out = np.empty(flat1.size, dtype=complex)
    for start in range(0, flat1.size, chunk):
        stop = start + chunk
        phase = flat1[start:stop, None] * cos_t[None, :] + flat2[start:stop, None] * sin_t[None, :]
        out[start:stop] = 0.5 * math.pi * (np.exp(1j * phase) @ weights)
    return out.reshape(shape)


def F(r: float, a: float, tol: float = DEFAULT_TOL) -> complex:
    """F(r, a) = int_{-a}^{a} e^{irs} (1 - s^2)^{-1/2} ds"""
    a = _check_a(a)
    if a == 0.0:
        return 0j
    return integrate_arcsine(lambda s: np.exp(1j * r * s), -a, a, tol).value


def F_pm(sign: int, r: float, a: float, tol: float = DEFAULT_TOL) -> complex:
    """F^+-(r, a) = 2 int_a^1 e^{+-irs} (1 - s^2)^{-1/2} ds"""
    sign = _check_sign(sign)
    a = _check_a(a)
    if a == 1.0:
        return 0j
    return 2.0 * integrate_arcsine(lambda s: np.exp(1j * sign * r * s), a, 1.0, tol).value


def _radicand(sign: int, a: float, s: np.ndarray) -> np.ndarray:
    return s * s + (1.0 - a * a) - 2j * sign * a * s


def f_a(sign: int, r: float, a: float, tol: float = DEFAULT_TOL) -> complex:
    """f_a^+-(r) = -+i int_0^inf e^{-rs} (s^2 + 1 - a^2 -+ 2ais)^{-1/2} ds (principal root)"""
    sign = _check_sign(sign)
    a = _check_a(a)
    if not r >= MIN_LAPLACE_R:
        raise DomainError(f"r must be >= {MIN_LAPLACE_R}, got {r}")
    result = integrate_laplace(lambda s: 1.0 / np.sqrt(_radicand(sign, a, s)), r, tol)
    return -1j * sign * result.value


def fa_derivative(sign: int, r: float, a: float, tol: float = DEFAULT_TOL) -> complex:
    """d/dr f_a^+-(r), differentiating under the integral (extra factor -s)"""
    sign = _check_sign(sign)
    a = _check_a(a)
    if not r >= MIN_LAPLACE_R:
        raise DomainError(f"r must be >= {MIN_LAPLACE_R}, got {r}")
    result = integrate_laplace(lambda s: -s / np.sqrt(_radicand(sign, a, s)), r, tol)
    return -1j * sign * result.value


def j_plus_identity(x: PlanePoint, tol: float = DEFAULT_TOL) -> complex:
    """J_+ assembled from F and F^{s1}; x1 = 0 is routed to the direct quadrature"""
    if x.r == 0.0:
        raise DomainError("j_plus_identity needs |x| > 0")
    if x.s1 == 0:
        return j_plus_direct(x, tol)
    return F(x.r, x.a, tol) + F_pm(x.s1, x.r, x.a, tol)


def j_plus_reassembled(x: PlanePoint, tol: float = DEFAULT_TOL) -> complex:
    """J_+ = 2 e^{i s1 R} f_1^{s1}(R) - s1 e^{iaR} f_a^+(R) + s1 e^{-iaR} f_a^-(R).

    x1 = 0 uses the s1 = + limit, which reduces to F(R, 1).
    """
    radius = x.r
    if radius < MIN_LAPLACE_R:
        raise DomainError(f"j_plus_reassembled needs |x| >= {MIN_LAPLACE_R}")
    s1 = x.s1 or 1
    a = x.a
    value = 2.0 * np.exp(1j * s1 * radius) * f_a(s1, radius, 1.0, tol)
    value -= s1 * np.exp(1j * a * radius) * f_a(1, radius, a, tol)
    value += s1 * np.exp(-1j * a * radius) * f_a(-1, radius, a, tol)
    return complex(value)


def j_minus(x: PlanePoint, tol: float = DEFAULT_TOL) -> complex:
    """J_-(x) = conj(J_+(x))"""
    return complex(np.conj(j_plus_direct(x, tol)))


class JPlusRay:
    """J_+(R e) for a fixed direction e and R in [r_lo, r_hi].

    The three smooth Laplace factors of the reassembled identity are sampled
    at Chebyshev points in log R, rescaled by sqrt(R), and refined onto a dense
    cubic spline so that evaluation at many radii is cheap.
    """

    def __init__(
        self,
        direction: PlanePoint,
        r_lo: float,
        r_hi: float,
        degree: int = 64,
        dense_points: int = 4096,
        tol: float = 1e-12,
    ):
        if not (MIN_LAPLACE_R <= r_lo < r_hi):
            raise DomainError(f"need {MIN_LAPLACE_R} <= r_lo < r_hi, got [{r_lo}, {r_hi}]")
        unit = direction.direction()
        self.s1 = unit.s1 or 1
        self.a = unit.a
        self.r_lo = float(r_lo)
        self.r_hi = float(r_hi)
        lo, hi = math.log(r_lo), math.log(r_hi)
        cheb_nodes = np.cos(math.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
        log_r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cheb_nodes
        radii = np.exp(log_r)

        columns = []
        for sign, a in ((self.s1, 1.0), (1, self.a), (-1, self.a)):
            vals = np.array([f_a(sign, float(rr), a, tol) for rr in radii]) * np.sqrt(radii)
            columns.extend([vals.real, vals.imag])
        samples = np.column_stack(columns)
        coeffs = np.polynomial.chebyshev.chebfit(cheb_nodes, samples, degree)

        dense_log = np.linspace(lo, hi, dense_points)
        dense_t = (2.0 * dense_log - (lo + hi)) / (hi - lo)
        dense = np.polynomial.chebyshev.chebval(dense_t, coeffs).T
        self._spline = CubicSpline(dense_log, dense, axis=0)
        logger.debug("JPlusRay s1=%d a=%.4f on [%g, %g]", self.s1, self.a, r_lo, r_hi)

    def factors(self, radius: np.ndarray) -> np.ndarray:
        """f_1^{s1}, f_a^+, f_a^- at the given radii, shape (3,) + radius.shape"""
        radius = np.asarray(radius, dtype=float)
        if np.any(radius < self.r_lo * (1 - 1e-12)) or np.any(radius > self.r_hi * (1 + 1e-12)):
            raise DomainError(f"radius outside [{self.r_lo:g}, {self.r_hi:g}]")
        dense = self._spline(np.log(radius))
        scale = 1.0 / np.sqrt(radius)
        out = np.empty((3,) + radius.shape, dtype=complex)
        for k in range(3):
            out[k] = (dense[..., 2 * k] + 1j * dense[..., 2 * k + 1]) * scale
        return out

    def __call__(self, radius: np.ndarray) -> np.ndarray:
        radius = np.asarray(radius, dtype=float)
        f1, fa_plus, fa_minus = self.factors(radius)
        s1, a = self.s1, self.a
        return (
            2.0 * np.exp(1j * s1 * radius) * f1
            - s1 * np.exp(1j * a * radius) * fa_plus
            + s1 * np.exp(-1j * a * radius) * fa_minus
        )


class DecayReport(BaseModel):
    """Weighted sup constants of f_a^+- and their drift as r_max grows"""

    sign: int
    a_grid: List[float]
    r_max_list: List[float]
    sup_j0: Dict[str, float]
    sup_j1: Dict[str, float]
    sup_strong: Dict[str, float]
    sup_below_one: Optional[float] = None
    drift_j0: float
    drift_j1: float
    drift_strong: float
    bounded: bool


def _decay_row(args) -> np.ndarray:
    sign, a, r_grid, tol = args
    rows = np.empty((len(r_grid), 3))
    for i, r in enumerate(r_grid):
        value = f_a(sign, r, a, tol)
        slope = fa_derivative(sign, r, a, tol)
        rows[i] = (math.sqrt(r) * abs(value), r**1.5 * abs(slope), r * abs(value))
    return rows


def verify_fa_decay(
    sign: int,
    a_grid: Sequence[float],
    r_grid: Sequence[float],
    tol: float = 1e-10,
    drift_limit: float = 0.2,
) -> DecayReport:
    """Sup of r^{1/2}|f_a^+-| and r^{3/2}|d_r f_a^+-| per r_max decade.

    The r |f_a| column is only tracked for a <= 1/sqrt(2). Points with r < 1
    contribute to `sup_below_one` and to nothing else.
    """
    sign = _check_sign(sign)
    a_values = [_check_a(a) for a in a_grid]
    radii = np.asarray(sorted(float(r) for r in r_grid))
    if radii.size == 0 or radii[0] < MIN_LAPLACE_R or radii[-1] > 1e4:
        raise DomainError("r_grid must be non-empty and lie in [1e-3, 1e4]")

    rows = map_parallel(_decay_row, [(sign, a, radii, tol) for a in a_values])
    table = np.stack(rows)  # (n_a, n_r, 3)

    strong_mask = np.array([a <= 1.0 / math.sqrt(2.0) + 1e-12 for a in a_values])
    above = radii >= 1.0
    decades = [10.0**k for k in range(2, 5) if 10.0**k <= radii[-1] * (1 + 1e-12)]
    if not decades:
        decades = [float(radii[-1])]

    sup_j0: Dict[str, float] = {}
    sup_j1: Dict[str, float] = {}
    sup_strong: Dict[str, float] = {}
    for r_max in decades:
        window = above & (radii <= r_max * (1 + 1e-12))
        key = f"{r_max:g}"
        sup_j0[key] = float(table[:, window, 0].max())
        sup_j1[key] = float(table[:, window, 1].max())
        sup_strong[key] = float(table[strong_mask][:, window, 2].max()) if strong_mask.any() else 0.0

    def drift(values: Dict[str, float]) -> float:
        first = values[f"{decades[0]:g}"]
        last = values[f"{decades[-1]:g}"]
        return abs(last / first - 1.0) if first > 0 else 0.0

    below = None
    if np.any(~above):
        below = float(table[:, ~above, :2].max())

    report = DecayReport(
        sign=sign,
        a_grid=a_values,
        r_max_list=decades,
        sup_j0=sup_j0,
        sup_j1=sup_j1,
        sup_strong=sup_strong,
        sup_below_one=below,
        drift_j0=drift(sup_j0),
        drift_j1=drift(sup_j1),
        drift_strong=drift(sup_strong),
        bounded=bool(
            np.all(np.isfinite(table))
            and drift(sup_j0) < drift_limit
            and drift(sup_j1) < drift_limit
            and drift(sup_strong) < drift_limit
        ),
    )
    logger.info(
        "f_a decay sign=%+d: C0=%.4g (drift %.3f), C1=%.4g (drift %.3f)",
        sign, sup_j0[f"{decades[-1]:g}"], report.drift_j0, sup_j1[f"{decades[-1]:g}"], report.drift_j1,
    )
    return report


def identity_residuals(r_grid: Sequence[float], a_grid: Sequence[float], tol: float = DEFAULT_TOL) -> pd.DataFrame:
    """|F - (e^{iar} f_a^+ + e^{-iar} f_a^-)| and |F^+- - (2 e^{+-ir} f_1^+- - 2 e^{+-iar} f_a^+-)| on an (r, a) grid"""

    def row(args) -> dict:
        r, a = args
        plus, minus = f_a(1, r, a, tol), f_a(-1, r, a, tol)
        residual_f = abs(F(r, a, tol) - (np.exp(1j * a * r) * plus + np.exp(-1j * a * r) * minus))
        out = {"r": r, "a": a, "F": residual_f}
        for sign, fa_value, name in ((1, plus, "F+"), (-1, minus, "F-")):
            expected = 2.0 * np.exp(1j * sign * r) * f_a(sign, r, 1.0, tol) - 2.0 * np.exp(1j * sign * a * r) * fa_value
            out[name] = abs(F_pm(sign, r, a, tol) - expected)
        return out

    cells = [(float(r), float(a)) for r in r_grid for a in a_grid]
    return pd.DataFrame(map_parallel(row, cells))


def j_plus_agreement(points: Sequence[PlanePoint], tol: float = DEFAULT_TOL) -> pd.DataFrame:
    """direct, identity and reassembled J_+ side by side with the Neumann series"""

    def row(x: PlanePoint) -> dict:
        direct = j_plus_direct(x, tol)
        identity = j_plus_identity(x, tol)
        reassembled = j_plus_reassembled(x, tol)
        series = j_plus_series(x.x1, x.x2)
        return {
            "x1": x.x1,
            "x2": x.x2,
            "direct_vs_identity": abs(direct - identity),
            "direct_vs_reassembled": abs(direct - reassembled),
            "direct_vs_series": abs(direct - series),
        }

    return pd.DataFrame(map_parallel(row, list(points)))


def random_points(count: int, r_min: float, r_max: float, seed: int = 0) -> List[PlanePoint]:
    """Seeded points with log-uniform |x| in [r_min, r_max], cycling through the four sign quadrants"""
    rng = np.random.default_rng(seed)
    radii = np.exp(rng.uniform(math.log(r_min), math.log(r_max), count))
    angles = rng.uniform(0.0, 0.5 * math.pi, count)
    points = []
    for k, (radius, angle) in enumerate(zip(radii, angles)):
        sx, sy = (1, 1, -1, -1)[k % 4], (1, -1, 1, -1)[k % 4]
        points.append(PlanePoint(sx * radius * math.cos(angle), sy * radius * math.sin(angle)))
    return points
