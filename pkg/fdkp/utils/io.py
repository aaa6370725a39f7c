"""
Output writers: every file is written to a temporary name in the target
directory and renamed into place.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import pandas as pd

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def resolve_output(path: Path) -> Path:
    """Bare file names go to FDKP_OUTPUT_DIR"""
    from fdkp.utils.config import get_settings

    path = Path(path)
    if path.parent == Path("."):
        return get_settings().output_dir / path
    return path


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(data))
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Header row plus 17-significant-digit floats"""
    return atomic_write_text(path, frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"))


def write_json(payload: Any, path: Path) -> Path:
    return atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(value: Any) -> Any:
    if hasattr(value, "model_dump"):
        return value.model_dump()
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_dat(frame: pd.DataFrame, path: Path, columns: Optional[Sequence[str]] = None) -> Path:
    """Whitespace-separated columns with a '#' header, readable by gnuplot"""
    columns = list(columns or frame.columns)
    lines = ["# " + " ".join(c.replace(" ", "_") for c in columns)]
    for row in frame[columns].itertuples(index=False):
        lines.append(" ".join(CSV_FLOAT_FORMAT % float(v) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_gnuplot_script(
    dat_path: Path,
    path: Path,
    x_column: int,
    y_columns: Iterable[int],
    labels: Iterable[str],
    logscale: str = "",
) -> Path:
    """Minimal gnuplot script plotting y columns of a .dat file against x"""
    lines = ["set key left bottom"]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = [
        f"'{Path(dat_path).name}' using {x_column}:{y} with linespoints title '{label}'"
        for y, label in zip(y_columns, labels)
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return atomic_write_text(path, "\n".join(lines) + "\n")
