"""
Environment settings, logging setup and TOML run configuration
"""

import logging
import os
import tomllib
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from fdkp.models.errors import UsageError
from fdkp.models.solver import SolverConfig

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Settings(BaseModel):
    """Process-wide settings read from the environment (.env is honoured)"""

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    log_level: str = "INFO"
    output_dir: Path = Path("output")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Read FDKP_THREADS, FDKP_LOG_LEVEL and FDKP_OUTPUT_DIR once"""
    values: Dict[str, Any] = {}
    threads = os.getenv("FDKP_THREADS")
    if threads:
        values["threads"] = int(threads)
    level = os.getenv("FDKP_LOG_LEVEL")
    if level:
        values["log_level"] = level.upper()
    output_dir = os.getenv("FDKP_OUTPUT_DIR")
    if output_dir:
        values["output_dir"] = Path(output_dir)
    return Settings(**values)


def configure_logging(level: Optional[str] = None) -> None:
    """Send library logs to stderr at the configured level"""
    logging.basicConfig(
        level=getattr(logging, (level or get_settings().log_level).upper(), logging.INFO),
        format=LOG_FORMAT,
    )


class InitialDataConfig(BaseModel):
    """[initial] table of a run file"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian", "constrained", "rough", "zero", "x2_independent"] = "constrained"
    amplitude: float = 0.1
    width: float = 1.0
    width2: Optional[float] = None
    sobolev: float = 2.0
    epsilon: float = 0.1
    seed: int = 0


class RunConfig(BaseModel):
    """[run] table of a run file"""

    model_config = ConfigDict(extra="forbid")

    t_final: float = Field(1.0, gt=0)
    record_every: int = Field(10, ge=1)
    ledger: Path = Path("ledger.csv")
    snapshot: Optional[Path] = None
    dat: Optional[Path] = None

    @field_validator("t_final")
    @classmethod
    def finite_time(cls, value: float) -> float:
        if value != value or value == float("inf"):
            raise ValueError("t_final must be finite")
        return value


def load_run_file(path: Path) -> Tuple[SolverConfig, InitialDataConfig, RunConfig]:
    """Parse a TOML run file with [solver], [initial] and [run] tables"""
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise UsageError(f"run file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"run file {path} is not valid TOML: {exc}") from exc

    unknown = set(raw) - {"solver", "initial", "run"}
    if unknown:
        raise UsageError(f"unknown tables in {path}: {sorted(unknown)}")
    try:
        return (
            SolverConfig(**raw.get("solver", {})),
            InitialDataConfig(**raw.get("initial", {})),
            RunConfig(**raw.get("run", {})),
        )
    except ValidationError as exc:
        raise UsageError(f"invalid run file {path}: {exc}") from exc


def float_list(text: str) -> List[float]:
    """Parse '0.25,1,4' (or whitespace-separated) into floats; used as an argparse type"""
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("empty list")
    return [float(p) for p in parts]
