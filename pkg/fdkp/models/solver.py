"""
Solver configuration and ledger records
"""

import math
from dataclasses import dataclass
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from fdkp.models.fields import GridSpec


class SolverConfig(BaseModel):
    """Parameters of a pseudo-spectral FDKP run"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float = Field(1.0, ge=0)
    n1: int = 64
    n2: int = 64
    L1: float = Field(2.0 * math.pi, gt=0)
    L2: float = Field(2.0 * math.pi, gt=0)
    dt: float = Field(1e-2, gt=0)
    dealias: Literal["two-thirds", "none"] = "two-thirds"
    s: float = Field(1.76, gt=0)
    scheme: Literal["etdrk4", "ifrk4"] = "etdrk4"
    kappa: float = 3.0
    contour_points: int = Field(32, ge=8)
    blowup_factor: float = Field(1e6, gt=1)

    @field_validator("n1", "n2")
    @classmethod
    def power_of_two(cls, value: int) -> int:
        if value < 2 or value & (value - 1):
            raise ValueError(f"grid size must be a power of two, got {value}")
        return value

    @field_validator("dt", "L1", "L2", "kappa")
    @classmethod
    def finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n1, self.n2, self.L1, self.L2)

    @property
    def hamiltonian_cubic_coefficient(self) -> float:
        """kappa/3: the cubic term of the Hamiltonian matching kappa d_x1(u^2)"""
        return self.kappa / 3.0


@dataclass(frozen=True)
class LedgerEntry:
    """Diagnostics recorded at one time of a run"""

    time: float
    l2: float
    hamiltonian: Optional[float]
    grad_sup: float
    hs_norm: float
    grad_high_sup: float
    forcing_norm: float

    def is_finite(self) -> bool:
        values = [self.time, self.l2, self.grad_sup, self.hs_norm, self.grad_high_sup, self.forcing_norm]
        if self.hamiltonian is not None:
            values.append(self.hamiltonian)
        return all(math.isfinite(v) for v in values)
