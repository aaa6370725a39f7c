"""
Doubly-periodic spectral fields, Littlewood-Paley projectors, the linear
propagator S(t) = exp(i t sgn(xi_1) m_beta(|xi|)) and the discrete
dispersive / Strichartz experiments.

Coefficients are the half spectrum of an rfft along x1 (axis 0), normalised
by 1/(n1 n2) so they are Fourier-series coefficients. On the xi_1 = 0 and
xi_1 = Nyquist columns sgn is taken to be 0.
"""

import logging
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.fft
from scipy.integrate import trapezoid

from fdkp.models.errors import BoundaryContaminationError, DomainError, GridMismatchError
from fdkp.models.fields import DyadicProjector, GridSpec, MixedNormSpec, ProjectorMode
from fdkp.services import symbol
from fdkp.utils.config import get_settings
from fdkp.utils.io import atomic_write_bytes
from fdkp.utils.workers import map_parallel

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"FDKPSNAP"
SNAPSHOT_HEADER = struct.Struct("<8sqqddd16x")
# packet stays this many widths away from the periodic boundary
GUARD_WIDTHS = 4.0


def forward(values: np.ndarray) -> np.ndarray:
    """Half-spectrum Fourier-series coefficients, shape (n1//2 + 1, n2)"""
    return scipy.fft.rfft2(values, axes=(1, 0), norm="forward", workers=get_settings().threads)


def inverse(coefficients: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.irfft2(
        coefficients, s=(grid.n2, grid.n1), axes=(1, 0), norm="forward", workers=get_settings().threads
    )


def wavenumbers(grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """xi_1 as a column (n1//2 + 1, 1) and xi_2 as a row (1, n2)"""
    xi1 = 2.0 * math.pi * scipy.fft.rfftfreq(grid.n1, d=grid.L1 / grid.n1)
    xi2 = 2.0 * math.pi * scipy.fft.fftfreq(grid.n2, d=grid.L2 / grid.n2)
    return xi1[:, None], xi2[None, :]


def integer_modes(grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Integer mode numbers k1 (column) and k2 (row) of the half spectrum"""
    k1 = np.arange(grid.n1 // 2 + 1)
    k2 = np.fft.fftfreq(grid.n2, d=1.0 / grid.n2).round().astype(int)
    return k1[:, None], k2[None, :]


def sign_xi1(grid: GridSpec) -> np.ndarray:
    """sgn(xi_1) on the half spectrum: 0 on the zero and Nyquist columns, +1 elsewhere"""
    sgn = np.ones((grid.n1 // 2 + 1, 1))
    sgn[0] = 0.0
    sgn[-1] = 0.0
    return sgn


def column_weights(grid: GridSpec) -> np.ndarray:
    """Multiplicity of each half-spectrum column in the full spectrum"""
    weights = np.full((grid.n1 // 2 + 1, 1), 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    return weights


@dataclass(frozen=True, eq=False)
class SpectralField2D:
    """Real field on a doubly periodic grid with lazily cached coefficients"""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.shape != (self.grid.n1, self.grid.n2):
            raise DomainError(f"values have shape {values.shape}, grid is {self.grid.n1} x {self.grid.n2}")
        if not np.all(np.isfinite(values)):
            raise DomainError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_coefficients(cls, grid: GridSpec, coefficients: np.ndarray) -> "SpectralField2D":
        return cls(grid, inverse(coefficients, grid))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "SpectralField2D":
        x1, x2 = grid_points(grid)
        return cls(grid, np.broadcast_to(fn(x1, x2), (grid.n1, grid.n2)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField2D":
        return cls(grid, np.zeros((grid.n1, grid.n2)))

    @property
    def n1(self) -> int:
        return self.grid.n1

    @property
    def n2(self) -> int:
        return self.grid.n2

    @property
    def L1(self) -> float:
        return self.grid.L1

    @property
    def L2(self) -> float:
        return self.grid.L2

    @cached_property
    def coefficients(self) -> np.ndarray:
        coefficients = forward(self.values)
        coefficients.setflags(write=False)
        return coefficients

    @cached_property
    def abs_xi(self) -> np.ndarray:
        xi1, xi2 = wavenumbers(self.grid)
        return np.hypot(xi1, xi2)

    def with_coefficients(self, coefficients: np.ndarray) -> "SpectralField2D":
        return SpectralField2D.from_coefficients(self.grid, coefficients)

    def _check(self, other: "SpectralField2D") -> None:
        if not isinstance(other, SpectralField2D):
            raise TypeError(f"expected SpectralField2D, got {type(other).__name__}")
        self.grid.require_same(other.grid)

    def __add__(self, other: "SpectralField2D") -> "SpectralField2D":
        self._check(other)
        return SpectralField2D(self.grid, self.values + other.values)

    def __sub__(self, other: "SpectralField2D") -> "SpectralField2D":
        self._check(other)
        return SpectralField2D(self.grid, self.values - other.values)

    def scaled(self, factor: float) -> "SpectralField2D":
        return SpectralField2D(self.grid, factor * self.values)

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.cell_area * float(np.sum(self.values**2)))

    def coefficient_l2_norm(self) -> float:
        """L^2 norm from the coefficients (Parseval)"""
        weights = column_weights(self.grid)
        total = float(np.sum(weights * np.abs(self.coefficients) ** 2))
        return math.sqrt(self.grid.L1 * self.grid.L2 * total)

    def lp_norm(self, p: float) -> float:
        if p == math.inf:
            return float(np.max(np.abs(self.values)))
        if p < 1:
            raise DomainError(f"p must be >= 1, got {p}")
        return (self.grid.cell_area * float(np.sum(np.abs(self.values) ** p))) ** (1.0 / p)

    def sobolev_norm(self, s: float) -> float:
        """||<D>^s u||_2"""
        weights = column_weights(self.grid)
        multiplier = (1.0 + self.abs_xi**2) ** s
        total = float(np.sum(weights * multiplier * np.abs(self.coefficients) ** 2))
        return math.sqrt(self.grid.L1 * self.grid.L2 * total)

    def gradient(self) -> Tuple[np.ndarray, np.ndarray]:
        xi1, xi2 = wavenumbers(self.grid)
        # odd derivative: drop the Nyquist modes
        k1 = np.where(sign_xi1(self.grid) == 0, 0.0, xi1)
        k2 = xi2.copy()
        if self.grid.n2 % 2 == 0:
            k2[0, self.grid.n2 // 2] = 0.0
        c = self.coefficients
        return inverse(1j * k1 * c, self.grid), inverse(1j * k2 * c, self.grid)

    def gradient_sup(self) -> float:
        d1, d2 = self.gradient()
        return float(np.max(np.hypot(d1, d2)))

    def hermitian_defect(self) -> float:
        """Largest violation of c(k1, -k2) = conj c(k1, k2) on the self-conjugate columns"""
        c = np.asarray(self.coefficients)
        defect = 0.0
        for column in (0, c.shape[0] - 1):
            row = c[column]
            mirrored = np.conj(np.roll(row[::-1], 1))
            defect = max(defect, float(np.max(np.abs(row - mirrored))))
        return defect


def grid_points(grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """x1 as a column and x2 as a row"""
    x1 = np.arange(grid.n1) * (grid.L1 / grid.n1)
    x2 = np.arange(grid.n2) * (grid.L2 / grid.n2)
    return x1[:, None], x2[None, :]


def periodic_offsets(grid: GridSpec, center: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Minimum-image displacement of every grid point from `center`"""
    x1, x2 = grid_points(grid)
    d1 = (x1 - center[0] + 0.5 * grid.L1) % grid.L1 - 0.5 * grid.L1
    d2 = (x2 - center[1] + 0.5 * grid.L2) % grid.L2 - 0.5 * grid.L2
    return d1, d2


def gaussian(
    grid: GridSpec,
    width: float,
    center: Optional[Tuple[float, float]] = None,
    amplitude: Optional[float] = None,
) -> SpectralField2D:
    """exp(-|x - center|^2 / (2 width^2)); unit mass unless an amplitude is given"""
    if width <= 0:
        raise DomainError(f"width must be positive, got {width}")
    center = center or (0.5 * grid.L1, 0.5 * grid.L2)
    if amplitude is None:
        amplitude = 1.0 / (2.0 * math.pi * width * width)
    d1, d2 = periodic_offsets(grid, center)
    return SpectralField2D(grid, amplitude * np.exp(-(d1**2 + d2**2) / (2.0 * width * width)))


def project(f: SpectralField2D, p: DyadicProjector) -> SpectralField2D:
    """Multiply the coefficients by the projector symbol"""
    if p.grid is not None and p.grid != f.grid:
        raise GridMismatchError(f"projector bound to {p.grid}, field on {f.grid}")
    return f.with_coefficients(f.coefficients * p.symbol(f.abs_xi))


def linear_multiplier(grid: GridSpec, beta: float, t: float) -> np.ndarray:
    """exp(i t sgn(xi_1) m_beta(|xi|)) on the half spectrum"""
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t}")
    xi1, xi2 = wavenumbers(grid)
    phase = sign_xi1(grid) * np.asarray(symbol.m(beta, np.hypot(xi1, xi2)))
    return np.exp(1j * t * phase)


def propagate_linear(f: SpectralField2D, beta: float, t: float) -> SpectralField2D:
    """S(t) f, exact in coefficient space"""
    return f.with_coefficients(f.coefficients * linear_multiplier(f.grid, beta, t))


def littlewood_paley_energy(f: SpectralField2D, lambdas: Sequence[float]) -> float:
    """sum over Lambda of ||P_Lambda f||^2 divided by ||f||^2"""
    total = f.l2_norm() ** 2
    if total == 0:
        raise DomainError("field has zero L^2 norm")
    pieces = [project(f, DyadicProjector(lam)).l2_norm() ** 2 for lam in lambdas]
    return float(sum(pieces) / total)


def _time_norm(space_norms: np.ndarray, q: float, T: float) -> float:
    if space_norms.size == 0:
        raise DomainError("empty time sequence")
    if q == math.inf:
        return float(space_norms.max())
    if space_norms.size < 2:
        raise DomainError("a finite time exponent needs at least two samples")
    dt = T / (space_norms.size - 1)
    return float(trapezoid(space_norms**q, dx=dt) ** (1.0 / q))


def mixed_norm(samples: Iterable[SpectralField2D], spec: MixedNormSpec) -> float:
    """Discrete L^q_t L^r_x norm of uniformly spaced samples on [0, T] (trapezoid in t)"""
    fields = list(samples)
    if not fields:
        raise DomainError("empty time sequence")
    for other in fields[1:]:
        fields[0].grid.require_same(other.grid)
    space = np.array([f.lp_norm(spec.r) for f in fields])
    return _time_norm(space, spec.q, spec.T)


def point_mass_width(Lambda: float) -> float:
    return 1.0 / (8.0 * Lambda)


def max_admissible_time(beta: float, Lambda: float, grid: GridSpec) -> float:
    """Largest |t| for which the packet stays GUARD_WIDTHS widths from the boundary"""
    _, v_max = symbol.group_velocity_bounds(beta, Lambda)
    room = 0.5 * min(grid.L1, grid.L2) - GUARD_WIDTHS * point_mass_width(Lambda)
    return max(room, 0.0) / v_max


def _require_resolved(Lambda: float, grid: GridSpec) -> None:
    if grid.nyquist < 2.0 * Lambda:
        raise DomainError(f"grid Nyquist {grid.nyquist:g} does not resolve the annulus |xi| <= {2 * Lambda:g}")


def dispersive_sup_experiment(
    beta: float,
    Lambda: float,
    t_list: Sequence[float],
    grid: GridSpec,
) -> pd.DataFrame:
    """sup-norm decay of S(t) P_Lambda applied to an approximate point mass.

    Columns: t, sup_abs, l1_norm, predicted, ratio with
    ratio = sup |t| / (<sqrt(beta) Lambda>^{-1} <Lambda>^{3/2} ||P f||_1).
    """
    _require_resolved(Lambda, grid)
    times = [float(t) for t in t_list]
    if any(t == 0 or not math.isfinite(t) for t in times):
        raise DomainError("times must be finite and non-zero")
    t_max = max_admissible_time(beta, Lambda, grid)
    worst = max(abs(t) for t in times)
    if worst > t_max:
        raise BoundaryContaminationError(
            f"t = {worst:g} lets the packet reach the boundary; max admissible t is {t_max:g}",
            max_admissible_t=t_max,
        )

    packet = project(gaussian(grid, point_mass_width(Lambda)), DyadicProjector(Lambda))
    l1 = packet.lp_norm(1)
    weight = symbol.dispersive_weight(beta, Lambda)

    def sup_at(t: float) -> float:
        return propagate_linear(packet, beta, t).lp_norm(math.inf)

    sups = map_parallel(sup_at, times)
    frame = pd.DataFrame({"t": times, "sup_abs": sups})
    frame["l1_norm"] = l1
    frame["predicted"] = weight * l1 / frame["t"].abs()
    frame["ratio"] = frame["sup_abs"] / frame["predicted"]
    logger.info("dispersive beta=%g Lambda=%g: max ratio %.4g", beta, Lambda, frame["ratio"].max())
    return frame


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x"""
    slope, _ = np.polyfit(np.log(np.abs(np.asarray(x, dtype=float))), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope)


def strichartz_grid(beta: float, Lambda: float, T: float, points_per_nyquist: float = 4.0) -> GridSpec:
    """Smallest square power-of-two grid that keeps the packet clear of the boundary up to T"""
    width = point_mass_width(Lambda)
    _, v_max = symbol.group_velocity_bounds(beta, Lambda)
    length = 2.2 * (GUARD_WIDTHS * width + v_max * T)
    n = 2 ** max(4, math.ceil(math.log2(points_per_nyquist * Lambda * length / math.pi)))
    return GridSpec(n, n, length, length)


def strichartz_experiment(
    beta: float,
    lambdas: Sequence[float],
    q: float,
    r: float,
    tau: float = 40.0,
    samples: int = 400,
) -> pd.DataFrame:
    """Ratio ||S(t) P f||_{L^q_T L^r} / ([weight]^{1/2 - 1/r} ||P f||_2) per Lambda.

    The horizon is T = tau times the dispersion time of each Lambda.
    """
    if samples < 2:
        raise DomainError("need at least two time samples")

    def cell(Lambda: float) -> dict:
        T = tau * symbol.dispersion_time(beta, Lambda)
        spec = MixedNormSpec(q=q, r=r, T=T)
        grid = strichartz_grid(beta, Lambda, T)
        packet = project(gaussian(grid, point_mass_width(Lambda)), DyadicProjector(Lambda))
        coefficients = packet.coefficients
        xi1, xi2 = wavenumbers(grid)
        phase = sign_xi1(grid) * np.asarray(symbol.m(beta, np.hypot(xi1, xi2)))
        times = np.linspace(0.0, T, samples)
        space = np.array(
            [SpectralField2D.from_coefficients(grid, coefficients * np.exp(1j * t * phase)).lp_norm(r) for t in times]
        )
        lhs = _time_norm(space, q, T)
        l2 = packet.l2_norm()
        weight = symbol.dispersive_weight(beta, Lambda)
        return {
            "Lambda": Lambda,
            "T": T,
            "n": grid.n1,
            "L": grid.L1,
            "lhs": lhs,
            "l2_norm": l2,
            "weight": weight,
            "ratio": lhs / (weight ** spec.strichartz_exponent * l2),
        }

    frame = pd.DataFrame(map_parallel(cell, [float(lam) for lam in lambdas]))
    logger.info(
        "strichartz beta=%g (q, r)=(%g, %g): ratio spread %.3f",
        beta, q, r, frame["ratio"].max() / frame["ratio"].min(),
    )
    return frame


def save_snapshot(f: SpectralField2D, path: Path, time: float = 0.0) -> Path:
    """64-byte header (magic, n1, n2, L1, L2, time) then little-endian float64 values, row-major"""
    header = SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, f.n1, f.n2, f.L1, f.L2, float(time))
    body = np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")
    return atomic_write_bytes(path, header + body)


def load_snapshot(path: Path) -> Tuple[SpectralField2D, float]:
    data = Path(path).read_bytes()
    if len(data) < SNAPSHOT_HEADER.size:
        raise DomainError(f"{path} is too short to be a snapshot")
    magic, n1, n2, L1, L2, time = SNAPSHOT_HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise DomainError(f"{path} is not a snapshot (bad magic)")
    expected = SNAPSHOT_HEADER.size + 8 * n1 * n2
    if len(data) != expected:
        raise DomainError(f"{path} has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=SNAPSHOT_HEADER.size).reshape(n1, n2)
    return SpectralField2D(GridSpec(int(n1), int(n2), float(L1), float(L2)), values), float(time)


def low_pass(f: SpectralField2D, n: float) -> SpectralField2D:
    """P_{<=n} f"""
    return project(f, DyadicProjector(n, ProjectorMode.LOW_PASS))


def high_pass(f: SpectralField2D, n: float) -> SpectralField2D:
    """P_{>n} f"""
    return project(f, DyadicProjector(n, ProjectorMode.HIGH_PASS))
