"""
Grid description, Littlewood-Paley cutoffs and mixed-norm parameters
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from fdkp.models.errors import DomainError, GridMismatchError


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """n1 x n2 points on [0, L1) x [0, L2); axis 0 is x1, axis 1 is x2"""

    n1: int
    n2: int
    L1: float
    L2: float

    def __post_init__(self):
        if not (_is_power_of_two(self.n1) and _is_power_of_two(self.n2)):
            raise DomainError(f"grid sizes must be powers of two, got {self.n1} x {self.n2}")
        if not (self.L1 > 0 and self.L2 > 0 and math.isfinite(self.L1) and math.isfinite(self.L2)):
            raise DomainError(f"periods must be positive, got {self.L1} x {self.L2}")

    @property
    def cell_area(self) -> float:
        return self.L1 * self.L2 / (self.n1 * self.n2)

    @property
    def nyquist(self) -> float:
        """Smallest of the two Nyquist wavenumbers"""
        return min(math.pi * self.n1 / self.L1, math.pi * self.n2 / self.L2)

    def require_same(self, other: "GridSpec") -> None:
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


def _psi(tau: np.ndarray) -> np.ndarray:
    """exp(-1/tau) for tau > 0, else 0"""
    tau = np.asarray(tau, dtype=float)
    safe = np.where(tau > 0, tau, 1.0)
    return np.where(tau > 0, np.exp(-1.0 / safe), 0.0)


def chi(s) -> np.ndarray:
    """Smooth cutoff: 1 on |s| <= 1, 0 on |s| >= 2, C-infinity in between"""
    s = np.abs(np.asarray(s, dtype=float))
    inner = _psi(2.0 - s)
    outer = _psi(s - 1.0)
    return inner / (inner + outer)


def rho(s) -> np.ndarray:
    """Dyadic bump chi(s) - chi(2s), supported in 1/2 <= |s| <= 2"""
    return chi(s) - chi(2.0 * np.asarray(s, dtype=float))


class ProjectorMode(str, Enum):
    ANNULUS = "annulus"
    LOW_PASS = "low"
    HIGH_PASS = "high"


@dataclass(frozen=True)
class DyadicProjector:
    """Fourier multiplier rho(|xi|/Lambda), chi(|xi|/Lambda) or 1 - chi(|xi|/Lambda)"""

    Lambda: float
    mode: ProjectorMode = ProjectorMode.ANNULUS
    grid: Optional[GridSpec] = None

    def __post_init__(self):
        if not (self.Lambda > 0 and math.isfinite(self.Lambda)):
            raise DomainError(f"Lambda must be positive, got {self.Lambda}")
        object.__setattr__(self, "mode", ProjectorMode(self.mode))

    def symbol(self, abs_xi: np.ndarray) -> np.ndarray:
        s = np.asarray(abs_xi, dtype=float) / self.Lambda
        if self.mode is ProjectorMode.ANNULUS:
            return rho(s)
        if self.mode is ProjectorMode.LOW_PASS:
            return chi(s)
        return 1.0 - chi(s)


class MixedNormSpec(BaseModel):
    """Exponents of an L^q_t L^r_x norm over [0, T]"""

    q: float = Field(ge=1)
    r: float = Field(ge=1)
    T: float = Field(gt=0)

    @model_validator(mode="after")
    def finite_horizon(self) -> "MixedNormSpec":
        if not math.isfinite(self.T):
            raise ValueError("T must be finite")
        return self

    @property
    def admissible(self) -> bool:
        """2 < q <= inf, 2 <= r < inf and 1/r + 1/q = 1/2"""
        if not (self.q > 2 and 2 <= self.r < math.inf):
            return False
        return abs(1.0 / self.r + 1.0 / self.q - 0.5) < 1e-12

    @property
    def strichartz_exponent(self) -> float:
        """1/2 - 1/r, the power of the dispersive weight in the Strichartz bound"""
        return 0.5 - 1.0 / self.r
