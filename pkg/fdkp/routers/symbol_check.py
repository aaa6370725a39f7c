"""
symbol-check: tabulate m_beta and its derivatives, test the two-sided ratio
bounds and the range of f_beta
"""

from pathlib import Path
from typing import Any, Dict

import numpy as np
from pydantic import BaseModel, Field

from fdkp.services.symbol import ratio_bounds, symbol_table
from fdkp.utils.io import resolve_output, write_csv

# largest accepted C/c of the ratio tests
RATIO_SPREAD_LIMIT = 10.0


class SymbolCheckRequest(BaseModel):
    beta: float = Field(ge=0)
    rmin: float = Field(1e-3, gt=0)
    rmax: float = Field(1e3, gt=0)
    points: int = Field(10_000, ge=2)
    out: Path = Path("symbol.csv")


def check_symbol(request: SymbolCheckRequest) -> Dict[str, Any]:
    table = symbol_table(request.beta, request.rmin, request.rmax, request.points)
    _, _, spread_first = ratio_bounds(table["ratio_m'"])
    _, _, spread_second = ratio_bounds(table["ratio_m''"])
    f_values = table["f_beta"].to_numpy()
    if request.beta == 0:
        f_ok = bool(np.all(f_values == -1.0))
        f_message = "f_0 == -1" if f_ok else "f_0 differs from -1"
    else:
        f_ok = bool(np.all((f_values > 1.0) & (f_values <= 3.0)))
        f_message = f"f_beta in [{f_values.min():.6f}, {f_values.max():.6f}]"
    success = f_ok and spread_first <= RATIO_SPREAD_LIMIT and spread_second <= RATIO_SPREAD_LIMIT
    return {
        "success": success,
        "message": f"C/c = {spread_first:.3f} (m'), {spread_second:.3f} (m''); {f_message}",
        "spread_m_prime": spread_first,
        "spread_m_double_prime": spread_second,
        "table": table,
    }


def handle_symbol_check(args) -> Dict[str, Any]:
    request = SymbolCheckRequest(beta=args.beta, rmin=args.rmin, rmax=args.rmax, points=args.points, out=args.out)
    result = check_symbol(request)
    path = write_csv(result.pop("table"), resolve_output(request.out))
    result["outputs"] = [str(path)]
    return result


def register(subparsers) -> None:
    parser = subparsers.add_parser("symbol-check", help="tabulate m_beta, m', m'' and the ratio bounds")
    parser.add_argument("--beta", type=float, required=True)
    parser.add_argument("--rmin", type=float, default=1e-3)
    parser.add_argument("--rmax", type=float, default=1e3)
    parser.add_argument("--points", type=int, default=10_000)
    parser.add_argument("--out", type=Path, default=Path("symbol.csv"))
    parser.set_defaults(handler=handle_symbol_check)
