"""
bessel-check: agreement of the J_+ evaluation paths, the F / F^+- identities
and the weighted decay of f_a^+-
"""

import math
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, Field

from fdkp.services.besselasym import (
    identity_residuals,
    j_plus_agreement,
    random_points,
    verify_fa_decay,
)
from fdkp.utils.io import resolve_output, write_json

IDENTITY_TOL = 1e-8
DECAY_A_GRID = [0.0, 0.25, 0.5, 1.0 / math.sqrt(2.0), 0.9, 1.0]


class BesselCheckRequest(BaseModel):
    points: int = Field(100, ge=1)
    seed: int = 0
    rmin: float = Field(1.0, gt=0)
    rmax: float = Field(200.0, gt=0)
    r_points: int = Field(20, ge=2)
    a_points: int = Field(11, ge=2)
    tol: float = Field(IDENTITY_TOL, gt=0)
    decay: bool = True
    decay_points_per_decade: int = Field(16, ge=2)
    out: Path = Path("bessel.json")


def check_identities(request: BesselCheckRequest) -> Dict[str, Any]:
    agreement = j_plus_agreement(random_points(request.points, request.rmin, request.rmax, request.seed))
    residuals = identity_residuals(
        np.geomspace(0.5, request.rmax, request.r_points), np.linspace(0.0, 1.0, request.a_points)
    )
    worst_direct = float(agreement["direct_vs_identity"].max())
    worst_reassembled = float(agreement["direct_vs_reassembled"].max())
    worst_series = float(agreement["direct_vs_series"].max())
    worst_identity = float(residuals[["F", "F+", "F-"]].to_numpy().max())
    success = max(worst_direct, worst_reassembled, worst_identity) < request.tol
    return {
        "success": success,
        "message": f"max |direct - identity| = {worst_direct:.2e}, identity residual {worst_identity:.2e}",
        "direct_vs_identity": worst_direct,
        "direct_vs_reassembled": worst_reassembled,
        "direct_vs_series": worst_series,
        "identity_residual": worst_identity,
    }


def check_decay(points_per_decade: int) -> Dict[str, Any]:
    radii = np.geomspace(1.0, 1e4, 4 * points_per_decade + 1)
    reports: List[Any] = [verify_fa_decay(sign, DECAY_A_GRID, radii) for sign in (1, -1)]
    success = all(report.bounded for report in reports)
    drift = max(max(r.drift_j0, r.drift_j1) for r in reports)
    return {
        "success": success,
        "message": f"largest sup drift from r_max = 1e2 to 1e4: {drift:.3f}",
        "reports": [report.model_dump() for report in reports],
    }


def handle_bessel_check(args) -> Dict[str, Any]:
    request = BesselCheckRequest(
        points=args.points,
        seed=args.seed,
        rmin=args.rmin,
        rmax=args.rmax,
        r_points=args.r_points,
        a_points=args.a_points,
        tol=args.tol,
        decay=not args.no_decay,
        out=args.out,
    )
    result = check_identities(request)
    if request.decay:
        decay = check_decay(request.decay_points_per_decade)
        result["decay"] = decay
        result["success"] = result["success"] and decay["success"]
        result["message"] += "; " + decay["message"]
    path = write_json(result, resolve_output(request.out))
    result["outputs"] = [str(path)]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("bessel-check", help="J_+ identity and f_a decay suites")
    parser.add_argument("--points", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rmin", type=float, default=1.0)
    parser.add_argument("--rmax", type=float, default=200.0)
    parser.add_argument("--r-points", type=int, default=20)
    parser.add_argument("--a-points", type=int, default=11)
    parser.add_argument("--tol", type=float, default=IDENTITY_TOL, help="pass threshold for the identity residuals")
    parser.add_argument("--no-decay", action="store_true", help="skip the f_a decay suite")
    parser.add_argument("--out", type=Path, default=Path("bessel.json"))
    parser.set_defaults(handler=handle_bessel_check)
