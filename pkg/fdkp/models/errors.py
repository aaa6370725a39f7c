"""
Exception hierarchy shared by the numerical services and the CLI routers
"""

from typing import Any, Optional


class FDKPError(Exception):
    """Base class for every error raised by the laboratory"""


class DomainError(FDKPError, ValueError):
    """Input outside the domain of an operation (negative, non-finite, wrong shape)"""


class UsageError(FDKPError):
    """Invalid command-line parameters; maps to exit code 2"""


class GridMismatchError(FDKPError, ValueError):
    """Two spectral objects live on different grids"""


class OscillationBudgetError(FDKPError, ValueError):
    """Query too oscillatory for the requested brute-force quadrature"""

    def __init__(self, message: str, budget: float, requested: float):
        super().__init__(message)
        self.budget = budget
        self.requested = requested


class QuadratureConvergenceError(FDKPError):
    """Adaptive quadrature hit its subdivision limit"""

    def __init__(self, message: str, partial: Any):
        super().__init__(message)
        # ComplexQuadResult with whatever had been accumulated
        self.partial = partial


class BoundaryContaminationError(FDKPError):
    """A wave packet would reach the periodic boundary within the requested times"""

    def __init__(self, message: str, max_admissible_t: float):
        super().__init__(message)
        self.max_admissible_t = max_admissible_t


class BlowUpError(FDKPError):
    """Evolution produced non-finite values or exceeded the growth threshold"""

    def __init__(self, message: str, last_good_state: Any, time: Optional[float] = None):
        super().__init__(message)
        self.last_good_state = last_good_state
        self.time = time
