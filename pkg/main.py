import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from fdkp.models.errors import FDKPError, UsageError
from fdkp.routers import bessel_check, evolution, kernel, linear, stability, symbol_check, verify
from fdkp.utils.config import configure_logging, get_settings

load_dotenv()

logger = logging.getLogger("fdkp")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    """All subcommands, one router module per family"""
    parser = argparse.ArgumentParser(
        prog="fdkp",
        description="Numerical laboratory for the full-dispersion KP equation",
    )
    parser.add_argument("--log-level", default=None, help="overrides FDKP_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for router in (symbol_check, bessel_check, kernel, linear, evolution, stability, verify):
        router.register(subparsers)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, dispatch to the router and map the outcome to an exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    configure_logging(args.log_level)
    logger.debug("settings: %s", get_settings())
    try:
        result = args.handler(args)
    except (UsageError, ValidationError) as exc:
        print(f"❌ {args.command}: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except FDKPError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"❌ {args.command}: {type(exc).__name__}: {exc}")
        return EXIT_FAILED

    mark = "✅" if result["success"] else "❌"
    print(f"{mark} {args.command}: {result['message']}")
    for path in result.get("outputs", []):
        print(f"   wrote {path}")
    return EXIT_OK if result["success"] else EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
