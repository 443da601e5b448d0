"""Readers for the run artifacts consumed by the renderers.

Every reader checks the CSV header against the schema its plot kind
expects before touching any rows, and failures name the offending column
so a mismatched file is diagnosable from the error message alone.
"""

import csv
import json
import re
from pathlib import Path

import numpy as np


class PlotkitError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(PlotkitError):
    """An input file does not match the schema its plot kind expects."""


def _header_and_rows(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        rows = list(r)
    if header is None:
        raise SchemaError(f"{path}: empty file, expected a header row")
    return header, rows


def _expect_exact(path, header, expected):
    for k, name in enumerate(expected):
        if k >= len(header):
            raise SchemaError(f"{path}: missing column {name!r}")
        if header[k] != name:
            raise SchemaError(f"{path}: column {k} is {header[k]!r}, expected {name!r}")
    if len(header) > len(expected):
        raise SchemaError(f"{path}: unexpected extra column {header[len(expected)]!r}")


def _as_floats(path, rows, width):
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise SchemaError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")
        try:
            out[i] = [float(v) for v in row]
        except ValueError as exc:
            raise SchemaError(f"{path}: row {i + 1}: {exc}") from None
    return out


def read_dataset(path):
    """dataset.csv -> (xs, us, x_next); dimensions are inferred from the header."""
    header, rows = _header_and_rows(path)
    d = sum(1 for h in header if re.fullmatch(r"x\d+", h))
    m = sum(1 for h in header if re.fullmatch(r"u\d+", h))
    if d == 0:
        raise SchemaError(f"{path}: no state columns (expected x0, x1, ...)")
    expected = (
        [f"x{k}" for k in range(d)]
        + [f"u{k}" for k in range(m)]
        + [f"xn{k}" for k in range(d)]
    )
    _expect_exact(path, header, expected)
    data = _as_floats(path, rows, len(expected))
    return data[:, :d], data[:, d : d + m], data[:, d + m :]


_BALL_FIXED = ["node_id", "parent_id", "via_sample", "iteration", "radius"]


def read_balls(path):
    """balls.csv / snapshot_*.csv -> (centers, radii)."""
    header, rows = _header_and_rows(path)
    d = len(header) - len(_BALL_FIXED)
    expected = _BALL_FIXED + [f"c{k}" for k in range(max(d, 0))]
    _expect_exact(path, header, expected)
    if d < 1:
        raise SchemaError(f"{path}: missing column 'c0'")
    data = _as_floats(path, rows, len(expected))
    return data[:, 5:], data[:, 4]


def read_sweep(path):
    """sweep.csv -> (param, doc)."""
    header, rows = _header_and_rows(path)
    _expect_exact(path, header, ["param", "doc", "n_controllable", "n_total"])
    data = _as_floats(path, rows, 4)
    return data[:, 0], data[:, 1]


def read_heatmap(path):
    """heatmap.csv -> (tx0, tx1, doc) as flat columns."""
    header, rows = _header_and_rows(path)
    _expect_exact(path, header, ["tx0", "tx1", "doc"])
    data = _as_floats(path, rows, 3)
    if data.shape[0] == 0:
        raise SchemaError(f"{path}: heatmap has no rows")
    return data[:, 0], data[:, 1], data[:, 2]


def read_constraints(path):
    """constraints_*.csv -> (a, b, c) coefficient columns."""
    header, rows = _header_and_rows(path)
    _expect_exact(path, header, ["a", "b", "c"])
    data = _as_floats(path, rows, 3)
    return data[:, 0], data[:, 1], data[:, 2]


def read_constraints_meta(path):
    """constraints_*.meta.json -> dict with the solved point, if the file exists."""
    path = Path(path)
    if not path.exists():
        return None
    with open(path) as fh:
        meta = json.load(fh)
    for key in ("L_x_hat", "L_u_hat"):
        if key not in meta:
            raise SchemaError(f"{path}: missing key {key!r}")
    return meta


def read_manifest(path):
    """manifest.json -> (run directory, sorted relative paths of run files)."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"manifest not found: {path}")
    with open(path) as fh:
        manifest = json.load(fh)
    files = manifest.get("files")
    if not isinstance(files, list):
        raise SchemaError(f"{path}: missing 'files' list")
    rels = []
    for entry in files:
        if not isinstance(entry, dict) or "path" not in entry:
            raise SchemaError(f"{path}: every files[] entry needs a 'path'")
        rels.append(str(entry["path"]))
    return path.parent, sorted(rels)
