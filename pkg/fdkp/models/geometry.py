"""
Points in the physical plane and kernel queries
"""

import math
from dataclasses import dataclass

from fdkp.models.errors import DomainError


@dataclass(frozen=True)
class PlanePoint:
    """A point x = (x1, x2) with the polar quantities used by the Bessel identities"""

    x1: float
    x2: float

    def __post_init__(self):
        # stored as python floats so numpy scalars behave like plain numbers
        object.__setattr__(self, "x1", float(self.x1))
        object.__setattr__(self, "x2", float(self.x2))
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise DomainError(f"PlanePoint coordinates must be finite, got ({self.x1}, {self.x2})")

    @property
    def r(self) -> float:
        return math.hypot(self.x1, self.x2)

    @property
    def s1(self) -> int:
        """sgn(x1) in {-1, 0, +1}"""
        return int(self.x1 > 0) - int(self.x1 < 0)

    @property
    def a(self) -> float:
        """|x2| / |x|, taken as 0 at the origin"""
        r = self.r
        if r == 0.0:
            return 0.0
        return min(1.0, abs(self.x2) / r)

    @property
    def angle(self) -> float:
        """Polar angle in [0, 2 pi)"""
        return math.atan2(self.x2, self.x1) % (2.0 * math.pi)

    def scaled(self, factor: float) -> "PlanePoint":
        return PlanePoint(self.x1 * factor, self.x2 * factor)

    def direction(self) -> "PlanePoint":
        """Unit vector along x"""
        r = self.r
        if r == 0.0:
            raise DomainError("the origin has no direction")
        return PlanePoint(self.x1 / r, self.x2 / r)


@dataclass(frozen=True)
class KernelQuery:
    """Parameters of one evaluation of the frequency-localised kernel I_{Lambda,t}(x)"""

    beta: float
    Lambda: float
    t: float
    x: PlanePoint

    def __post_init__(self):
        if not math.isfinite(self.beta) or self.beta < 0:
            raise DomainError(f"beta must be finite and non-negative, got {self.beta}")
        if not math.isfinite(self.Lambda) or self.Lambda <= 0:
            raise DomainError(f"Lambda must be positive, got {self.Lambda}")
        if not math.isfinite(self.t):
            raise DomainError(f"t must be finite, got {self.t}")

    def at(self, x: PlanePoint) -> "KernelQuery":
        """Same (beta, Lambda, t) at another point"""
        return KernelQuery(self.beta, self.Lambda, self.t, x)
