"""
dispersive and strichartz: the free propagator applied to frequency-localised
point masses on the periodic grid
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from fdkp.models.fields import GridSpec, MixedNormSpec
from fdkp.services.spectral import dispersive_sup_experiment, loglog_slope, strichartz_experiment
from fdkp.utils.config import float_list
from fdkp.utils.io import resolve_output, write_csv, write_dat, write_gnuplot_script

STRICHARTZ_SPREAD_LIMIT = 3.0
# sup |t| / (weight ||P f||_1) must stay below this
DISPERSIVE_RATIO_LIMIT = 10.0
# allowed distance of the log-log slope from -1
DISPERSIVE_SLOPE_TOL = 0.1


class DispersiveRequest(BaseModel):
    beta: float = Field(ge=0)
    Lambda: float = Field(gt=0)
    t_list: List[float]
    n: int = 256
    L: float = Field(64.0, gt=0)
    out: Path = Path("dispersive.csv")
    dat: Optional[Path] = None

    @field_validator("n")
    @classmethod
    def power_of_two(cls, value: int) -> int:
        if value < 2 or value & (value - 1):
            raise ValueError(f"--grid must be a power of two, got {value}")
        return value


class StrichartzRequest(BaseModel):
    beta: float = Field(ge=0)
    lambdas: List[float] = [1.0, 2.0, 4.0, 8.0]
    q: float = Field(4.0, gt=2)
    r: float = Field(4.0, ge=2)
    tau: float = Field(40.0, gt=0)
    samples: int = Field(400, ge=2)
    out: Path = Path("strichartz.csv")

    @model_validator(mode="after")
    def admissible_pair(self) -> "StrichartzRequest":
        if not MixedNormSpec(q=self.q, r=self.r, T=1.0).admissible:
            raise ValueError(f"(q, r) = ({self.q}, {self.r}) is not admissible: need 1/q + 1/r = 1/2")
        return self


def run_dispersive(request: DispersiveRequest) -> Dict[str, Any]:
    grid = GridSpec(request.n, request.n, request.L, request.L)
    frame = dispersive_sup_experiment(request.beta, request.Lambda, request.t_list, grid)
    worst = float(frame["ratio"].max())
    # a slope needs two distinct |t|
    spans = frame["t"].abs().nunique() >= 2
    slope = loglog_slope(frame["t"], frame["sup_abs"]) if spans else math.nan
    slope_ok = not spans or abs(slope + 1.0) <= DISPERSIVE_SLOPE_TOL
    return {
        "success": bool(math.isfinite(worst) and worst <= DISPERSIVE_RATIO_LIMIT and slope_ok),
        "message": f"max ratio {worst:.4g}, log-log slope {slope:.3f}",
        "slope": slope,
        "table": frame,
    }


def run_strichartz(request: StrichartzRequest) -> Dict[str, Any]:
    frame = strichartz_experiment(request.beta, request.lambdas, request.q, request.r, request.tau, request.samples)
    spread = float(frame["ratio"].max() / frame["ratio"].min())
    return {
        "success": spread < STRICHARTZ_SPREAD_LIMIT,
        "message": f"beta={request.beta:g} (q, r)=({request.q:g}, {request.r:g}): ratio spread {spread:.3f}",
        "spread": spread,
        "table": frame,
    }


def handle_dispersive(args) -> Dict[str, Any]:
    request = DispersiveRequest(
        beta=args.beta, Lambda=args.Lambda, t_list=args.t_list, n=args.n, L=args.L, out=args.out, dat=args.dat
    )
    result = run_dispersive(request)
    table = result.pop("table")
    outputs = [write_csv(table, resolve_output(request.out))]
    if request.dat is not None:
        dat = write_dat(table, resolve_output(request.dat), ["t", "sup_abs", "predicted"])
        outputs.extend([dat, write_gnuplot_script(dat, dat.with_suffix(".gp"), 1, [2, 3], ["sup", "bound"], "xy")])
    result["outputs"] = [str(p) for p in outputs]
    return result


def handle_strichartz(args) -> Dict[str, Any]:
    request = StrichartzRequest(
        beta=args.beta,
        lambdas=args.lambda_list,
        q=args.q,
        r=args.r,
        tau=args.tau,
        samples=args.samples,
        out=args.out,
    )
    result = run_strichartz(request)
    path = write_csv(result.pop("table"), resolve_output(request.out))
    result["outputs"] = [str(path)]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("dispersive", help="sup-norm decay of S(t) P_Lambda on a point mass")
    parser.add_argument("--beta", type=float, required=True)
    parser.add_argument("--lambda", dest="Lambda", type=float, required=True)
    parser.add_argument("--tlist", "--t-list", dest="t_list", type=float_list, required=True)
    parser.add_argument("--grid", "--n", dest="n", type=int, default=256, help="points per direction (power of two)")
    parser.add_argument("--domain", "--L", dest="L", type=float, default=64.0, help="side length of the periodic box")
    parser.add_argument("--out", type=Path, default=Path("dispersive.csv"))
    parser.add_argument("--dat", type=Path, default=None)
    parser.set_defaults(handler=handle_dispersive)

    parser = subparsers.add_parser("strichartz", help="frequency-localised Strichartz ratios")
    parser.add_argument("--beta", type=float, required=True)
    parser.add_argument("--lambda-list", type=float_list, default=[1.0, 2.0, 4.0, 8.0])
    parser.add_argument("--q", type=float, default=4.0)
    parser.add_argument("--r", type=float, default=4.0)
    parser.add_argument("--tau", type=float, default=40.0)
    parser.add_argument("--samples", type=int, default=400)
    parser.add_argument("--out", type=Path, default=Path("strichartz.csv"))
    parser.set_defaults(handler=handle_strichartz)
