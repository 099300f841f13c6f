"""CSV and JSON formats read and written by the command line tools."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from oudw.sde import SamplePath

SPEC_VERSION = "1.0"
PATH_HEADER = ["t", "x", "v"]
QUANTILE_HEADER = ["alpha", "z_alpha", "ci_low", "ci_high", "draws", "method", "seed"]
RAW_HEADER = ["rep", "theta_hat", "rho_hat", "dw", "z_stat"]
_GRID_RTOL = 1e-9


class FormatError(ValueError):
    """Malformed input file."""


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_path_csv(path: SamplePath, dest: str | Path | TextIO) -> None:
    rows = zip(path.t, path.x, path.v)
    _write_rows(dest, PATH_HEADER, ([_fmt(c) for c in r] for r in rows))


def _write_rows(dest, header: list[str], rows: Iterable[list]) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            _write_rows(fh, header, rows)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def read_path_csv(src: str | Path | TextIO) -> SamplePath:
    """Parse a ``t,x,v`` file; the grid must be uniform and start at t = 0."""
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_path_csv(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != PATH_HEADER:
        raise FormatError(f"header: expected 't,x,v', got {','.join(header or [])!r}")
    cols: list[list[float]] = [[], [], []]
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"line {lineno}: expected 3 cells, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise FormatError(f"line {lineno}, column {PATH_HEADER[j]}: not a number: {cell!r}")
            if not math.isfinite(value):
                raise FormatError(f"line {lineno}, column {PATH_HEADER[j]}: non-finite value")
            cols[j].append(value)
    t, x, v = (np.array(c) for c in cols)
    if t.size < 2:
        raise FormatError("t: a path needs at least two rows")
    if t[0] != 0.0:
        raise FormatError(f"t: grid must start at 0, got {t[0]}")
    step = t[1]
    if not step > 0:
        raise FormatError(f"t: grid must be increasing, got step {step}")
    expected = np.arange(t.size) * step
    if np.max(np.abs(t - expected)) > _GRID_RTOL * max(expected[-1], 1.0):
        raise FormatError("t: grid is not uniform")
    if x[0] != 0.0 or v[0] != 0.0:
        raise FormatError("x, v: paths must start at 0")
    return SamplePath(step=float(step), x=x, v=v)


def write_quantile_csv(rows, draws: int, method: str, seed: int, dest) -> None:
    out = [
        [_fmt(a), _fmt(z), _fmt(lo), _fmt(hi), str(draws), method, str(seed)]
        for a, z, lo, hi in rows
    ]
    _write_rows(dest, QUANTILE_HEADER, out)


def write_raw_csv(raw: dict, dest) -> None:
    rows = (
        [str(i), _fmt(a), _fmt(b), _fmt(c), _fmt(d)]
        for i, (a, b, c, d) in enumerate(
            zip(raw["theta_hat"], raw["rho_hat"], raw["dw"], raw["z_stat"])
        )
    )
    _write_rows(dest, RAW_HEADER, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(record: dict, dest: str | Path | TextIO | None = None) -> str:
    """Serialize with a ``spec_version`` field; returns the text."""
    text = json.dumps({"spec_version": SPEC_VERSION, **_jsonable(record)}, indent=2)
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text + "\n")
    elif dest is not None:
        dest.write(text + "\n")
    return text
