"""
Dispersion symbol m_beta(r) = r <sqrt(beta) r> (tanh r / r)^(1/2), its first two
derivatives and the auxiliary functions T, S, K, E, A_beta, B, f_beta used to
bound them.

Every function accepts a scalar or a numpy array and returns the same kind.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import pandas as pd

from fdkp.models.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# below this radius tanh(r)/r and E(r) come from their Taylor series
R_SWITCH = 1e-2
# tanh == 1 and sech == 0 beyond this radius
R_SATURATE = 40.0
# E(r) switches to the e^{2r}-factored form above this radius
R_EXP_FACTOR = 20.0


def _validated(r: ArrayLike, name: str = "r", positive: bool = False) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if positive and np.any(arr <= 0):
        raise DomainError(f"{name} must be > 0")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0")
    return arr


def _validated_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta < 0:
        raise DomainError(f"beta must be finite and non-negative, got {beta}")
    return beta


def _out(arr: np.ndarray, like: ArrayLike) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def bracket(x: ArrayLike) -> ArrayLike:
    """Japanese bracket <x> = (1 + x^2)^(1/2)"""
    return np.hypot(1.0, x)


def tanh(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.where(r > R_SATURATE, 1.0, np.tanh(np.minimum(r, R_SATURATE)))


def sech(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.where(r > R_SATURATE, 0.0, 1.0 / np.cosh(np.minimum(r, R_SATURATE)))


def tanh_over_r(r: np.ndarray) -> np.ndarray:
    """tanh(r)/r with the removable singularity at 0 filled by its series"""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    series = 1.0 - r2 / 3.0 + 2.0 * r2**2 / 15.0 - 17.0 * r2**3 / 315.0
    safe = np.where(r < R_SWITCH, 1.0, r)
    return np.where(r < R_SWITCH, series, tanh(safe) / safe)


def K(r: ArrayLike) -> ArrayLike:
    """K(r) = (tanh r / r)^(1/2)"""
    arr = _validated(r)
    return _out(np.sqrt(tanh_over_r(arr)), r)


def _E(r: np.ndarray) -> np.ndarray:
    r2 = r * r
    series = 2.0 * r / 3.0 + 2.0 * r * r2 / 15.0 + 4.0 * r * r2**2 / 315.0 + 2.0 * r * r2**3 / 2835.0
    mid_r = np.clip(r, R_SWITCH, R_EXP_FACTOR)
    mid = (np.sinh(2.0 * mid_r) - 2.0 * mid_r) / (2.0 * mid_r * mid_r)
    big_r = np.maximum(r, R_EXP_FACTOR)
    with np.errstate(over="ignore"):
        tail = 1.0 - np.exp(-4.0 * big_r) - 4.0 * big_r * np.exp(-2.0 * big_r)
        big = (tail / (4.0 * big_r * big_r)) * np.exp(2.0 * big_r)
    return np.where(r < R_SWITCH, series, np.where(r <= R_EXP_FACTOR, mid, big))


def aux_E(r: ArrayLike) -> ArrayLike:
    """E(r) = (e^{2r} - e^{-2r} - 4r) / (4 r^2)"""
    arr = _validated(r, positive=True)
    return _out(_E(arr), r)


def _E_sech2(r: np.ndarray) -> np.ndarray:
    """E(r) S(r)^2, equal to (K^2 - S^2)/r, finite for every r >= 0"""
    s2 = sech(r) ** 2
    safe = np.where(r < 1.0, 1.0, r)
    large = (tanh_over_r(safe) - sech(safe) ** 2) / safe
    small = _E(np.minimum(r, 1.0)) * s2
    return np.where(r < 1.0, small, large)


def aux_A(beta: float, r: ArrayLike) -> ArrayLike:
    """A_beta(r) = <sqrt(beta) r>^{-2} [1 + K^{-2} S^2 + <sqrt(beta) r>^{-2}]"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    g2 = 1.0 + beta * arr * arr
    value = (1.0 + sech(arr) ** 2 / tanh_over_r(arr) + 1.0 / g2) / g2
    return _out(value, r)


def aux_B(r: ArrayLike) -> ArrayLike:
    """B(r) = 4 S^2 + K^{-4} E^2 S^4"""
    arr = _validated(r)
    k2 = tanh_over_r(arr)
    es2 = _E_sech2(arr)
    return _out(4.0 * sech(arr) ** 2 + es2 * es2 / (k2 * k2), r)


def f_beta_ratio(beta: float, r: ArrayLike) -> ArrayLike:
    """f_beta(r) = 4 beta A_beta(r) / B(r) - 1"""
    beta = _validated_beta(beta)
    arr = _validated(r, positive=True)
    return _out(4.0 * beta * np.asarray(aux_A(beta, arr)) / np.asarray(aux_B(arr)) - 1.0, r)


def m(beta: float, r: ArrayLike) -> ArrayLike:
    """m_beta(r) = r <sqrt(beta) r> K(r)"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    value = arr * np.hypot(1.0, np.sqrt(beta) * arr) * np.sqrt(tanh_over_r(arr))
    return _out(value, r)


def m_prime(beta: float, r: ArrayLike) -> ArrayLike:
    """m'_beta = 1/2 <sqrt(beta) r>(K + K^{-1} S^2) + beta r^2 <sqrt(beta) r>^{-1} K"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    g = np.hypot(1.0, np.sqrt(beta) * arr)
    k = np.sqrt(tanh_over_r(arr))
    value = 0.5 * g * (k + sech(arr) ** 2 / k) + beta * arr * arr * k / g
    return _out(value, r)


def m_double_prime(beta: float, r: ArrayLike) -> ArrayLike:
    """m''_beta = 1/4 r <sqrt(beta) r> K B f_beta, written without the quotient A/B"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    g2 = 1.0 + beta * arr * arr
    g = np.sqrt(g2)
    k = np.sqrt(tanh_over_r(arr))
    b = np.asarray(aux_B(arr))
    a = np.asarray(aux_A(beta, arr))
    value = arr * g * k * (beta * a - 0.25 * b)
    return _out(value, r)


def m_prime_weight(beta: float, r: ArrayLike) -> ArrayLike:
    """<sqrt(beta) r> <r>^{-1/2}, the size of m'_beta"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    return _out(np.hypot(1.0, np.sqrt(beta) * arr) / np.sqrt(np.hypot(1.0, arr)), r)


def m_double_prime_weight(beta: float, r: ArrayLike) -> ArrayLike:
    """r <sqrt(beta) r> <r>^{-5/2}, the size of |m''_beta|"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    return _out(arr * np.hypot(1.0, np.sqrt(beta) * arr) * np.hypot(1.0, arr) ** -2.5, r)


def m_kdv(beta: float, r: ArrayLike) -> ArrayLike:
    """Long-wave expansion r + (beta/2 - 1/6) r^3 of m_beta"""
    beta = _validated_beta(beta)
    arr = _validated(r)
    return _out(arr + (0.5 * beta - 1.0 / 6.0) * arr**3, r)


def critical_speed(beta: float, Lambda: float) -> float:
    """<sqrt(beta) Lambda> <Lambda>^{-1/2}"""
    return float(m_prime_weight(beta, Lambda))


def dispersive_weight(beta: float, Lambda: float) -> float:
    """<sqrt(beta) Lambda>^{-1} <Lambda>^{3/2}, the Lambda-dependence of the dispersive constant"""
    beta = _validated_beta(beta)
    return float(np.hypot(1.0, Lambda) ** 1.5 / np.hypot(1.0, np.sqrt(beta) * Lambda))


def group_velocity_bounds(beta: float, Lambda: float, points: int = 257) -> Tuple[float, float]:
    """min and max of m'_beta over the annulus [Lambda/2, 2 Lambda]"""
    radii = np.linspace(0.5 * Lambda, 2.0 * Lambda, points)
    speeds = np.asarray(m_prime(beta, radii))
    return float(speeds.min()), float(speeds.max())


def dispersion_time(beta: float, Lambda: float) -> float:
    """Time after which a packet at frequency Lambda has dispersed (the larger of the curvature and transit scales)"""
    curvature = Lambda**2 * abs(float(m_double_prime(beta, Lambda)))
    transit = Lambda * float(m_prime(beta, Lambda))
    return max(1.0 / curvature, 1.0 / transit)


@dataclass(frozen=True)
class DispersionSymbol:
    """The symbol m_beta bound to a fixed surface-tension coefficient"""

    beta: float

    def __post_init__(self):
        _validated_beta(self.beta)

    def __call__(self, r: ArrayLike) -> ArrayLike:
        return m(self.beta, r)

    def prime(self, r: ArrayLike) -> ArrayLike:
        return m_prime(self.beta, r)

    def double_prime(self, r: ArrayLike) -> ArrayLike:
        return m_double_prime(self.beta, r)

    def f(self, r: ArrayLike) -> ArrayLike:
        return f_beta_ratio(self.beta, r)


def symbol_table(beta: float, rmin: float = 1e-3, rmax: float = 1e3, points: int = 10_000) -> pd.DataFrame:
    """Log-spaced table of m, m', m'', the two weight ratios and f_beta"""
    if not (0 < rmin < rmax):
        raise DomainError(f"need 0 < rmin < rmax, got rmin={rmin}, rmax={rmax}")
    if points < 2:
        raise DomainError("points must be at least 2")
    r = np.geomspace(rmin, rmax, points)
    mp = np.asarray(m_prime(beta, r))
    mpp = np.asarray(m_double_prime(beta, r))
    table = pd.DataFrame(
        {
            "r": r,
            "m": m(beta, r),
            "m'": mp,
            "m''": mpp,
            "ratio_m'": mp / np.asarray(m_prime_weight(beta, r)),
            "ratio_m''": np.abs(mpp) / np.asarray(m_double_prime_weight(beta, r)),
            "f_beta": f_beta_ratio(beta, r),
        }
    )
    logger.debug("symbol table beta=%s r in [%g, %g], %d points", beta, rmin, rmax, points)
    return table


def ratio_bounds(column: pd.Series) -> Tuple[float, float, float]:
    """Empirical (c, C, C/c) of a positive ratio column"""
    lo = float(column.min())
    hi = float(column.max())
    return lo, hi, hi / lo
