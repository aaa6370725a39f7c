"""
decay: sup_x |I_{Lambda,t}| against t, plus the kernel_radial / kernel_2d
cross-validation used by verify-all
"""

import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from fdkp.models.errors import QuadratureConvergenceError
from fdkp.models.geometry import KernelQuery, PlanePoint
from fdkp.services.oscint import (
    QUICK_DIRECTIONS,
    SWEEP_DIRECTIONS,
    decay_experiment,
    decay_time_window,
    kernel_2d,
    kernel_radial,
)
from fdkp.utils.config import float_list
from fdkp.utils.io import resolve_output, write_csv, write_dat, write_gnuplot_script
from fdkp.utils.workers import map_parallel

logger = logging.getLogger(__name__)

SLOPE_TOL = 0.1
CONSTANT_SPREAD_LIMIT = 3.0
AGREEMENT_TOL = 1e-6
IMAG_TOL = 1e-8

CROSS_LAMBDAS = (0.5, 1.0, 2.0)
CROSS_TIMES = (0.0, 1.0, 5.0)
CROSS_POINTS = (
    PlanePoint(0.0, 0.0),
    PlanePoint(3.0, 2.0),
    PlanePoint(-2.0, 1.0),
    PlanePoint(0.0, -4.0),
    PlanePoint(5.0, 0.0),
)


class DecayRequest(BaseModel):
    beta: float = Field(ge=0)
    lambdas: List[float] = [0.25, 1.0, 4.0]
    tmin: float = Field(10.0, gt=0)
    tmax: float = Field(1e3, gt=0)
    points: int = Field(7, ge=2)
    coarse: int = Field(96, ge=8)
    quick: bool = False
    out: Path = Path("decay.csv")
    dat: Optional[Path] = None


def run_decay(request: DecayRequest) -> Dict[str, Any]:
    windows = {lam: decay_time_window(request.beta, lam, request.tmin, request.tmax, request.points) for lam in request.lambdas}
    directions = QUICK_DIRECTIONS if request.quick else SWEEP_DIRECTIONS
    frame, summaries = decay_experiment(request.beta, request.lambdas, windows, directions, request.coarse)
    slopes_ok = all(abs(s.slope + 1.0) <= SLOPE_TOL for s in summaries)
    constants = [s.constant for s in summaries]
    spread = max(constants) / min(constants)
    success = slopes_ok and spread <= CONSTANT_SPREAD_LIMIT
    slopes = ", ".join(f"{s.Lambda:g}: {s.slope:.3f}" for s in summaries)
    return {
        "success": success,
        "message": f"beta={request.beta:g} slopes {{{slopes}}}, constant spread {spread:.2f}",
        "summaries": [s.model_dump() for s in summaries],
        "table": frame,
    }


def kernel_crosscheck(
    beta: float,
    lambdas: Sequence[float] = CROSS_LAMBDAS,
    times: Sequence[float] = CROSS_TIMES,
    points: Sequence[PlanePoint] = CROSS_POINTS,
) -> Dict[str, Any]:
    """kernel_radial against kernel_2d on a (Lambda, t, x) lattice"""
    queries = [KernelQuery(beta, lam, t, x) for lam, t, x in itertools.product(lambdas, times, points)]

    def row(q: KernelQuery) -> dict:
        radial = kernel_radial(q)
        converged = True
        try:
            brute = kernel_2d(q)
        except QuadratureConvergenceError as exc:
            logger.warning("%s", exc)
            converged = False
            brute = exc.partial.value
        return {
            "Lambda": q.Lambda,
            "t": q.t,
            "x1": q.x.x1,
            "x2": q.x.x2,
            "radial": radial.real,
            "tensor": brute.real,
            "difference": abs(radial - brute),
            "imag": max(abs(radial.imag), abs(brute.imag)),
            "converged": converged,
        }

    frame = pd.DataFrame(map_parallel(row, queries))
    worst = float(frame["difference"].max())
    worst_imag = float(frame["imag"].max())
    unsettled = int((~frame["converged"]).sum())
    return {
        "success": worst < AGREEMENT_TOL and worst_imag < IMAG_TOL and unsettled == 0,
        "message": (
            f"beta={beta:g}: max |radial - 2d| = {worst:.2e}, max |Im| = {worst_imag:.2e}, "
            f"{unsettled} unsettled tensor quadratures"
        ),
        "table": frame,
    }


def handle_decay(args) -> Dict[str, Any]:
    request = DecayRequest(
        beta=args.beta,
        lambdas=args.lambda_list,
        tmin=args.tmin,
        tmax=args.tmax,
        points=args.points,
        out=args.out,
        dat=args.dat,
    )
    result = run_decay(request)
    table = result.pop("table")
    outputs = [write_csv(table, resolve_output(request.out))]
    if request.dat is not None:
        dat = write_dat(table, resolve_output(request.dat), ["t", "sup_abs_I", "predicted", "Lambda"])
        script = write_gnuplot_script(dat, dat.with_suffix(".gp"), 1, [2, 3], ["sup |I|", "weight / t"], "xy")
        outputs.extend([dat, script])
    result["outputs"] = [str(p) for p in outputs]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("decay", help="t^-1 decay of the frequency-localised kernel")
    parser.add_argument("--beta", type=float, required=True)
    parser.add_argument("--lambda-list", type=float_list, default=[0.25, 1.0, 4.0])
    parser.add_argument("--tmin", type=float, default=10.0)
    parser.add_argument("--tmax", type=float, default=1e3)
    parser.add_argument("--points", type=int, default=7)
    parser.add_argument("--out", type=Path, default=Path("decay.csv"))
    parser.add_argument("--dat", type=Path, default=None)
    parser.set_defaults(handler=handle_decay)
