"""Deterministic CSV output.

Floats are written with ``repr`` so that reading them back with ``float``
reproduces every bit.  Every file starts with ``#`` comment lines carrying
the tool version and the hash of the effective configuration.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .grid import ScalarField


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def header_lines(config_hash: str | None = None) -> list[str]:
    lines = [f"# subelliptic {__version__}"]
    if config_hash is not None:
        lines.append(f"# config-sha256 {config_hash}")
    return lines


def write_table(path, columns: Sequence[str], rows, config_hash: str | None = None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines(config_hash):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_field(
    field: ScalarField, path, config_hash: str | None = None, values=None, value_name: str = "value"
) -> Path:
    """Interior nodes in lexicographic order as ``x1,...,xn,value``.

    ``values`` overrides ``field.values`` (e.g. a distance array on the same grid).
    """
    grid = field.grid
    vals = field.values if values is None else np.asarray(values, dtype=float)
    cols = [f"x{k + 1}" for k in range(grid.ndim)] + [value_name]
    rows = (list(pt) + [v] for pt, v in zip(grid.interior_points.tolist(), vals.tolist()))
    return write_table(path, cols, rows, config_hash)


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def read_field(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``write_field``: ``(points (N, n), values (N,))``."""
    header, rows = read_table(path)
    data = np.array([[float(x) for x in row] for row in rows], dtype=float).reshape(-1, len(header))
    return data[:, :-1], data[:, -1]
