"""
verify-all: the eight acceptance checks with a one-line verdict each and a
JSON report
"""

import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from fdkp.models.errors import FDKPError
from fdkp.models.solver import SolverConfig
from fdkp.routers.bessel_check import BesselCheckRequest, check_decay, check_identities
from fdkp.routers.evolution import REDUCTION_TOL, WhithamCompareRequest, compare_whitham, ledger_frame, relative_drift
from fdkp.routers.kernel import DecayRequest, kernel_crosscheck, run_decay
from fdkp.routers.linear import StrichartzRequest, run_strichartz
from fdkp.routers.stability import BonaSmithRequest, TwinRunRequest, run_bona_smith, run_twin
from fdkp.routers.symbol_check import SymbolCheckRequest, check_symbol
from fdkp.services.solver import constrained_bump, evolve, initial_state, observed_order
from fdkp.utils.io import resolve_output, write_json

logger = logging.getLogger(__name__)

L2_DRIFT_TOL = 1e-8
HAMILTONIAN_DRIFT_TOL = 1e-6
MIN_ORDER = 3.0
REFERENCE_DT = 5e-3


def _combine(results: List[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        "success": all(r["success"] for r in results),
        "message": "; ".join(r["message"] for r in results),
    }


def bessel_identities(quick: bool) -> Dict[str, Any]:
    request = BesselCheckRequest(points=25, r_points=8, a_points=6) if quick else BesselCheckRequest()
    return check_identities(request)


def bessel_decay(quick: bool) -> Dict[str, Any]:
    result = check_decay(6 if quick else 16)
    result.pop("reports")
    return result


def kernel_agreement(quick: bool) -> Dict[str, Any]:
    betas = (1.0,) if quick else (0.0, 1.0)
    results = [kernel_crosscheck(beta) for beta in betas]
    for r in results:
        r.pop("table")
    return _combine(results)


def dispersive_decay(quick: bool) -> Dict[str, Any]:
    results = []
    for beta in (0.0, 1.0):
        request = DecayRequest(beta=beta, points=5 if quick else 7, coarse=64 if quick else 96, quick=quick)
        result = run_decay(request)
        result.pop("table")
        results.append(result)
    return _combine(results)


def strichartz(quick: bool) -> Dict[str, Any]:
    results = []
    for beta in (0.0, 1.0):
        for q, r in ((4.0, 4.0), (8.0, 8.0 / 3.0)):
            request = StrichartzRequest(beta=beta, q=q, r=r, samples=100 if quick else 400)
            result = run_strichartz(request)
            result.pop("table")
            results.append(result)
    return _combine(results)


def symbol_bounds(quick: bool) -> Dict[str, Any]:
    results = [check_symbol(SymbolCheckRequest(beta=beta)) for beta in (0.0, 1.0)]
    for r in results:
        r.pop("table")
    return _combine(results)


def solver_correctness(quick: bool) -> Dict[str, Any]:
    config = SolverConfig(beta=1.0, n1=64, n2=64, dt=REFERENCE_DT)
    u0 = constrained_bump(config.grid, 0.1, 0.6)
    run = evolve(initial_state(u0, config), config, 1.0, record_every=20)
    frame = ledger_frame(list(run.ledger))
    l2_drift = relative_drift(frame["l2"])
    h_drift = relative_drift(frame["hamiltonian"])
    reduction = compare_whitham(WhithamCompareRequest())
    order_config = SolverConfig(beta=1.0, n1=64, n2=64)
    order = observed_order(constrained_bump(order_config.grid, 0.05, 0.6), order_config, 1.0, (0.1, 0.05), 0.0125)
    success = (
        l2_drift < L2_DRIFT_TOL
        and h_drift < HAMILTONIAN_DRIFT_TOL
        and reduction["reduction_error"] <= REDUCTION_TOL
        and order >= MIN_ORDER
    )
    return {
        "success": bool(success),
        "message": (
            f"L2 drift {l2_drift:.2e}, Hamiltonian drift {h_drift:.2e}, "
            f"reduction {reduction['reduction_error']:.2e}, order {order:.2f}"
        ),
    }


def wellposedness(quick: bool) -> Dict[str, Any]:
    twin = run_twin(TwinRunRequest(t_final=0.5 if quick else 1.0))
    twin.pop("reports")
    bona = run_bona_smith(BonaSmithRequest())
    bona.pop("report")
    return _combine([twin, bona])


CHECKS: List[Tuple[str, Callable[[bool], Dict[str, Any]]]] = [
    ("bessel identities", bessel_identities),
    ("bessel decay", bessel_decay),
    ("kernel cross-validation", kernel_agreement),
    ("dispersive decay", dispersive_decay),
    ("strichartz", strichartz),
    ("symbol bounds", symbol_bounds),
    ("solver correctness", solver_correctness),
    ("well-posedness", wellposedness),
]


def run_checks(quick: bool, only: Optional[List[str]] = None) -> Dict[str, Any]:
    rows = []
    for name, check in CHECKS:
        if only and name not in only:
            continue
        started = time.perf_counter()
        try:
            result = check(quick)
        except FDKPError as exc:
            logger.error("check %s raised %s", name, exc)
            result = {"success": False, "message": f"{type(exc).__name__}: {exc}"}
        seconds = time.perf_counter() - started
        rows.append({"name": name, "success": bool(result["success"]), "message": result["message"], "seconds": seconds})
        mark = "✅" if result["success"] else "❌"
        print(f"{mark} {name} ({seconds:.1f}s): {result['message']}")
    passed = sum(r["success"] for r in rows)
    return {
        "success": passed == len(rows),
        "message": f"{passed}/{len(rows)} checks passed",
        "quick": quick,
        "checks": rows,
    }


def handle_verify_all(args) -> Dict[str, Any]:
    result = run_checks(args.quick, args.only)
    result["outputs"] = [str(write_json(result, resolve_output(args.out)))]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify-all", help="run the acceptance suite")
    parser.add_argument("--quick", action="store_true", help="reduced grids and sample counts")
    parser.add_argument("--only", action="append", choices=[name for name, _ in CHECKS], help="run only this check (repeatable)")
    parser.add_argument("--out", type=Path, default=Path("verify_report.json"))
    parser.set_defaults(handler=handle_verify_all)
