"""
Result type returned by every 1-D quadrature engine
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class ComplexQuadResult:
    """Integral value with its error estimate and the number of integrand evaluations"""

    value: complex
    abs_error_estimate: float
    nodes_used: int

    def __post_init__(self):
        if self.abs_error_estimate < 0:
            raise ValueError("abs_error_estimate must be non-negative")
        if self.nodes_used < 1:
            raise ValueError("nodes_used must be at least 1")

    def __add__(self, other: "ComplexQuadResult") -> "ComplexQuadResult":
        return ComplexQuadResult(
            value=self.value + other.value,
            abs_error_estimate=self.abs_error_estimate + other.abs_error_estimate,
            nodes_used=self.nodes_used + other.nodes_used,
        )

    def scaled(self, factor: complex) -> "ComplexQuadResult":
        """Multiply the value (and error) by a constant"""
        return ComplexQuadResult(
            value=complex(factor) * self.value,
            abs_error_estimate=abs(factor) * self.abs_error_estimate,
            nodes_used=self.nodes_used,
        )
