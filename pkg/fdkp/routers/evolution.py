"""
evolve and whitham-compare: nonlinear runs, their ledgers and the 1-D
reduction oracle
"""

import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from fdkp.models.errors import BlowUpError
from fdkp.models.solver import LedgerEntry, SolverConfig
from fdkp.services.solver import (
    WhithamState,
    evolve,
    initial_data,
    initial_state,
    kdv_reference_run,
    reduction_profile,
    whitham_run,
    x2_independent,
)
from fdkp.services.spectral import save_snapshot
from fdkp.utils.config import InitialDataConfig, RunConfig, load_run_file
from fdkp.utils.io import resolve_output, write_csv, write_dat, write_gnuplot_script

logger = logging.getLogger(__name__)

REDUCTION_TOL = 1e-8
KDV_TOL = 1e-2


def ledger_frame(ledger: List[LedgerEntry]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(entry) for entry in ledger])
    frame["hamiltonian"] = frame["hamiltonian"].astype(float)
    return frame


def relative_drift(values: pd.Series) -> float:
    """max |v - v0| / |v0| (absolute when v0 = 0)"""
    values = values.dropna()
    if values.empty:
        return math.nan
    v0 = float(values.iloc[0])
    scale = abs(v0) if v0 != 0 else 1.0
    return float((values - v0).abs().max() / scale)


def run_evolution(config: SolverConfig, initial: InitialDataConfig, run: RunConfig) -> Dict[str, Any]:
    start = initial_state(initial_data(config, initial), config)
    try:
        final = evolve(start, config, run.t_final, run.record_every)
        success, message = True, f"reached t={final.time:g}"
    except BlowUpError as exc:
        final = exc.last_good_state
        success, message = False, f"blow-up: {exc}"
    frame = ledger_frame(list(final.ledger))
    l2_drift = relative_drift(frame["l2"])
    hamiltonian_drift = relative_drift(frame["hamiltonian"])
    return {
        "success": success,
        "message": f"{message}; L2 drift {l2_drift:.2e}, Hamiltonian drift {hamiltonian_drift:.2e}",
        "l2_drift": l2_drift,
        "hamiltonian_drift": hamiltonian_drift,
        "state": final,
        "ledger": frame,
    }


def handle_evolve(args) -> Dict[str, Any]:
    config, initial, run = load_run_file(args.config)
    result = run_evolution(config, initial, run)
    state = result.pop("state")
    frame = result.pop("ledger")
    outputs = [write_csv(frame, resolve_output(run.ledger))]
    if run.snapshot is not None:
        outputs.append(save_snapshot(state.field, resolve_output(run.snapshot), state.time))
    if run.dat is not None:
        dat = write_dat(frame, resolve_output(run.dat), ["time", "l2", "hs_norm", "grad_sup"])
        outputs.append(dat)
        outputs.append(write_gnuplot_script(dat, dat.with_suffix(".gp"), 1, [2, 3, 4], ["L2", "H^s", "grad sup"]))
    result["outputs"] = [str(p) for p in outputs]
    return result


class WhithamCompareRequest(BaseModel):
    beta: float = Field(1.0, ge=0)
    n: int = 128
    n2: int = 8
    L: float = Field(40.0, gt=0)
    dt: float = Field(1e-2, gt=0)
    t_final: float = Field(1.0, gt=0)
    amplitude: float = 0.05
    width: float = Field(4.0, gt=0)
    scheme: str = "etdrk4"
    out: Path = Path("whitham.csv")
    dat: Optional[Path] = None


def compare_whitham(request: WhithamCompareRequest) -> Dict[str, Any]:
    """x2-independent 2-D run against the 1-D Whitham run, and the 1-D run against KdV"""
    config = SolverConfig(
        beta=request.beta, n1=request.n, n2=request.n2, L1=request.L, L2=request.L,
        dt=request.dt, scheme=request.scheme,
    )
    x1 = np.arange(request.n) * request.L / request.n - 0.5 * request.L
    profile = request.amplitude * np.exp(-(x1**2) / (2.0 * request.width**2))
    plane = evolve(initial_state(x2_independent(config.grid, profile), config), config, request.t_final, 10)
    line = whitham_run(WhithamState(profile, request.L), config, request.t_final)
    kdv = kdv_reference_run(WhithamState(profile, request.L), config, request.t_final)

    reduced = reduction_profile(plane.field)
    reduction_error = float(np.max(np.abs(reduced - line.values)))
    kdv_error = float(np.linalg.norm(line.values - kdv.values) / np.linalg.norm(line.values))
    table = pd.DataFrame({"x1": x1 + 0.5 * request.L, "fdkp_2d": reduced, "whitham": line.values, "kdv": kdv.values})
    return {
        "success": reduction_error <= REDUCTION_TOL and kdv_error <= KDV_TOL,
        "message": f"|2-D - Whitham|_inf = {reduction_error:.2e}, |Whitham - KdV|_2 / |Whitham|_2 = {kdv_error:.2e}",
        "reduction_error": reduction_error,
        "kdv_error": kdv_error,
        "table": table,
    }


def handle_whitham_compare(args) -> Dict[str, Any]:
    request = WhithamCompareRequest(
        beta=args.beta, n=args.n, L=args.L, dt=args.dt, t_final=args.t_final,
        amplitude=args.amplitude, width=args.width, out=args.out, dat=args.dat,
    )
    result = compare_whitham(request)
    table = result.pop("table")
    outputs = [write_csv(table, resolve_output(request.out))]
    if request.dat is not None:
        dat = write_dat(table, resolve_output(request.dat))
        outputs.extend([dat, write_gnuplot_script(dat, dat.with_suffix(".gp"), 1, [2, 3, 4], ["2-D", "Whitham", "KdV"])])
    result["outputs"] = [str(p) for p in outputs]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("evolve", help="run the nonlinear solver from a TOML run file")
    parser.add_argument("--config", type=Path, required=True)
    parser.set_defaults(handler=handle_evolve)

    parser = subparsers.add_parser("whitham-compare", help="2-D x2-independent run against the 1-D Whitham and KdV runs")
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--n", type=int, default=128)
    parser.add_argument("--L", type=float, default=40.0)
    parser.add_argument("--dt", type=float, default=1e-2)
    parser.add_argument("--t-final", type=float, default=1.0)
    parser.add_argument("--amplitude", type=float, default=0.05)
    parser.add_argument("--width", type=float, default=4.0)
    parser.add_argument("--out", type=Path, default=Path("whitham.csv"))
    parser.add_argument("--dat", type=Path, default=None)
    parser.set_defaults(handler=handle_whitham_compare)
