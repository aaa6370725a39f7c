"""
twin-run and bona-smith: L^2 stability of nearby solutions and convergence of
regularised data
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

from pydantic import BaseModel, Field

from fdkp.models.solver import SolverConfig
from fdkp.services.solver import constrained_bump, rough_data
from fdkp.services.wellposedness import bona_smith_convergence, perturbation_halving, twin_run_l2_stability
from fdkp.utils.config import float_list
from fdkp.utils.io import resolve_output, write_json

# relative change of the fitted c allowed under dt-halving
C_STABILITY = 0.2
# fitted c below this is indistinguishable from round-off in the ratios
C_FLOOR = 1e-3
# relative excess of a refined run over the coarse exp(c K)
GRONWALL_SLACK = 1e-2
# halving the perturbation halves the separation to within this fraction
HALVING_TOL = 0.1


class TwinRunRequest(BaseModel):
    beta: float = Field(1.0, ge=0)
    n: int = 64
    L: float = Field(2.0 * math.pi, gt=0)
    dt: float = Field(1e-2, gt=0)
    t_final: float = Field(1.0, gt=0)
    amplitude: float = 0.1
    width: float = Field(0.6, gt=0)
    perturbation: float = Field(1e-3, gt=0)
    out: Path = Path("twin_run.json")


class BonaSmithRequest(BaseModel):
    beta: float = Field(1.0, ge=0)
    n: int = 128
    L: float = Field(2.0 * math.pi, gt=0)
    dt: float = Field(1e-3, gt=0)
    t_final: float = Field(0.05, gt=0)
    s: float = Field(1.0, gt=0)
    epsilon: float = Field(0.1, gt=0)
    amplitude: float = Field(0.05, gt=0)
    n_list: List[float] = [4.0, 8.0, 16.0]
    seed: int = 0
    out: Path = Path("bona_smith.json")


def _c_stable(values: Sequence[float]) -> bool:
    spread = max(values) - min(values)
    return spread <= max(C_STABILITY * max(abs(v) for v in values), C_FLOOR)


def run_twin(request: TwinRunRequest, dt_levels: int = 2) -> Dict[str, Any]:
    """Twin runs at dt, dt/2, ...

    c is fitted on the coarsest run and must bound the ratio of every finer
    run; the fitted c must also be stable under the refinement and halving the
    perturbation must halve the separation.
    """
    reports = []
    halving = math.nan
    for level in range(dt_levels):
        config = SolverConfig(beta=request.beta, n1=request.n, n2=request.n, L1=request.L, L2=request.L, dt=request.dt / 2**level)
        base = constrained_bump(config.grid, request.amplitude, request.width)
        nudge = constrained_bump(config.grid, 1.0, 1.5 * request.width)
        nudge = nudge.scaled(request.perturbation / nudge.l2_norm())
        record_every = max(1, 2**level)
        reports.append(twin_run_l2_stability(base, base + nudge, config, request.t_final, record_every=record_every))
        if level == 0:
            halving = perturbation_halving(base, nudge, config, request.t_final, record_every)
    fitted = [r.fitted_c for r in reports]
    excess = max((r.excess_over(fitted[0]) for r in reports[1:]), default=1.0)
    bounded = excess <= 1.0 + GRONWALL_SLACK
    stable = _c_stable(fitted)
    linear = abs(halving - 0.5) <= HALVING_TOL * 0.5
    return {
        "success": bounded and stable and linear,
        "message": (
            f"ratio {max(r.ratio for r in reports):.6g}, fitted c {', '.join(f'{c:.4g}' for c in fitted)}, "
            f"refined run over exp(cK) by {excess:.6g}, halving ratio {halving:.4f}"
        ),
        "excess": excess,
        "halving_ratio": halving,
        "reports": [r.model_dump() for r in reports],
    }


def run_bona_smith(request: BonaSmithRequest) -> Dict[str, Any]:
    config = SolverConfig(beta=request.beta, n1=request.n, n2=request.n, L1=request.L, L2=request.L, dt=request.dt)
    u0 = rough_data(config.grid, request.s, request.epsilon, request.amplitude, request.seed)
    report = bona_smith_convergence(u0, request.s, request.n_list, config, request.t_final, sigmas=(0.0, 0.5 * request.s), record_every=10)
    success = report.monotone and report.rate_consistent and all(report.scaled_non_increasing.values())
    return {
        "success": success,
        "message": (
            f"H^{report.base_sigma:g} Cauchy rate {report.rate:.3f} (data exponent {request.s:g}), "
            f"monotone={report.monotone}"
        ),
        "report": report.model_dump(),
    }


def handle_twin_run(args) -> Dict[str, Any]:
    request = TwinRunRequest(
        beta=args.beta, n=args.n, L=args.L, dt=args.dt, t_final=args.t_final,
        amplitude=args.amplitude, perturbation=args.perturbation, out=args.out,
    )
    result = run_twin(request)
    result["outputs"] = [str(write_json(result, resolve_output(request.out)))]
    return result


def handle_bona_smith(args) -> Dict[str, Any]:
    request = BonaSmithRequest(
        beta=args.beta, n=args.n, dt=args.dt, t_final=args.t_final, s=args.s,
        epsilon=args.epsilon, amplitude=args.amplitude, n_list=args.n_list, seed=args.seed, out=args.out,
    )
    result = run_bona_smith(request)
    result["outputs"] = [str(write_json(result, resolve_output(request.out)))]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("twin-run", help="L^2 stability of two nearby solutions")
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--L", type=float, default=2.0 * math.pi)
    parser.add_argument("--dt", type=float, default=1e-2)
    parser.add_argument("--t-final", type=float, default=1.0)
    parser.add_argument("--amplitude", type=float, default=0.1)
    parser.add_argument("--perturbation", type=float, default=1e-3)
    parser.add_argument("--out", type=Path, default=Path("twin_run.json"))
    parser.set_defaults(handler=handle_twin_run)

    parser = subparsers.add_parser("bona-smith", help="convergence of solutions from P_{<=n} u0")
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--n", type=int, default=128)
    parser.add_argument("--dt", type=float, default=1e-3)
    parser.add_argument("--t-final", type=float, default=0.05)
    parser.add_argument("--s", type=float, default=1.0)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--amplitude", type=float, default=0.05)
    parser.add_argument("--n-list", type=float_list, default=[4.0, 8.0, 16.0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("bona_smith.json"))
    parser.set_defaults(handler=handle_bona_smith)
