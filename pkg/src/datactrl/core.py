"""Shared domain types: states, transitions, datasets and metric balls.

Everything downstream (Lipschitz estimation, tree search, reachability
graphs) works on plain float64 numpy arrays.  A state is a 1-D array, a
dataset is a struct-of-arrays triple (x, u, x_next).  All stored arrays are
frozen (writeable=False) after construction so instances can be shared
across threads without defensive copies.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

# Absorbs float noise in radius arithmetic when comparing ball containment.
# Radii in this package are O(1e-2 .. 1e-1), so 1e-12 is far below any
# meaningful geometric difference.
TIE_TOLERANCE = 1e-12

State = np.ndarray
ControlInput = np.ndarray


class DatactrlError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(DatactrlError):
    """Operands with incompatible dimensions."""


class DataError(DatactrlError):
    """Invalid or inconsistent input data (maps to CLI exit code 2)."""


class InvariantViolationError(DatactrlError):
    """An internal invariant was broken (maps to CLI exit code 3)."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def as_state(coords) -> State:
    """Validate and convert array-like coordinates to a frozen 1-D float64 array."""
    arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(
            f"state must be a non-empty 1-D vector, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataError(f"state has non-finite entries: {arr}")
    return _freeze(arr)


def distance(a, b) -> float:
    """Euclidean distance between two equal-dimension vectors."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise DimensionMismatchError(f"shape mismatch: {av.shape} vs {bv.shape}")
    return float(np.linalg.norm(av - bv))


@dataclass(frozen=True, eq=False)
class StateBall:
    """Closed Euclidean ball ``{p : d(p, center) <= radius}``."""

    center: State
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_state(self.center))
        r = float(self.radius)
        if not np.isfinite(r) or r < 0.0:
            raise ValueError(f"radius must be finite and >= 0, got {r}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def ball_contains(ball: StateBall, point) -> bool:
    """Closed-ball membership test (boundary points are inside)."""
    return distance(point, ball.center) <= ball.radius


def ball_subset(inner: StateBall, outer: StateBall, tie_tolerance: float = TIE_TOLERANCE) -> bool:
    """True when ``inner`` is contained in ``outer`` up to ``tie_tolerance``.

    Containment of Euclidean balls reduces to
    ``d(c_in, c_out) + r_in <= r_out``; the tolerance absorbs float noise
    from radius arithmetic elsewhere in the pipeline.
    """
    return distance(inner.center, outer.center) + inner.radius <= outer.radius + tie_tolerance


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``low[k] <= v[k] <= high[k]``.  Degenerate sides allowed."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        lo = _freeze(np.atleast_1d(self.low))
        hi = _freeze(np.atleast_1d(self.high))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatchError(f"box bounds shape mismatch: {lo.shape} vs {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DataError("box bounds must be finite")
        if np.any(lo > hi):
            raise DataError(f"box has low > high: {lo} vs {hi}")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    def contains(self, points) -> np.ndarray | bool:
        """Membership test; accepts a single vector or an (n, dim) batch."""
        pts = np.asarray(points, dtype=np.float64)
        inside = np.logical_and(pts >= self.low, pts <= self.high).all(axis=-1)
        return bool(inside) if inside.ndim == 0 else inside

    def to_json(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Box":
        return cls(np.asarray(obj["low"]), np.asarray(obj["high"]))


@dataclass(frozen=True, eq=False)
class Bounds:
    """State-space and input-space boxes attached to a dataset."""

    state: Box
    input: Box

    def to_json(self) -> dict:
        return {"state": self.state.to_json(), "input": self.input.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Bounds":
        return cls(Box.from_json(obj["state"]), Box.from_json(obj["input"]))


@dataclass(frozen=True, eq=False)
class TransitionSample:
    """One observed transition (x, u) -> x_next."""

    x: State
    u: ControlInput
    x_next: State

    def __post_init__(self):
        object.__setattr__(self, "x", as_state(self.x))
        object.__setattr__(self, "u", as_state(self.u))
        object.__setattr__(self, "x_next", as_state(self.x_next))
        if self.x.shape != self.x_next.shape:
            raise DimensionMismatchError(
                f"x and x_next dimensions differ: {self.x.shape} vs {self.x_next.shape}"
            )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered collection of transition samples stored as arrays.

    xs, x_next: (N, d) float64.  us: (N, m) float64.  When ``bounds`` is
    present every state and input must lie inside it.
    """

    xs: np.ndarray
    us: np.ndarray
    x_next: np.ndarray
    bounds: Bounds | None = None

    def __post_init__(self):
        xs = _freeze(np.atleast_2d(self.xs))
        us = _freeze(np.atleast_2d(self.us))
        xn = _freeze(np.atleast_2d(self.x_next))
        if xs.ndim != 2 or us.ndim != 2 or xn.ndim != 2:
            raise DimensionMismatchError("dataset arrays must be 2-D")
        if xs.shape[0] == 0:
            raise DataError("dataset must contain at least one sample")
        if xs.shape != xn.shape or us.shape[0] != xs.shape[0]:
            raise DimensionMismatchError(
                f"inconsistent dataset shapes: xs {xs.shape}, us {us.shape}, x_next {xn.shape}"
            )
        for name, arr in (("xs", xs), ("us", us), ("x_next", xn)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"dataset array {name} has non-finite entries")
        if self.bounds is not None:
            b = self.bounds
            if b.state.dim != xs.shape[1] or b.input.dim != us.shape[1]:
                raise DimensionMismatchError("bounds dimensions do not match dataset")
            if not (np.all(b.state.contains(xs)) and np.all(b.state.contains(xn))):
                raise DataError("dataset contains states outside the declared state bounds")
            if not np.all(b.input.contains(us)):
                raise DataError("dataset contains inputs outside the declared input bounds")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "us", us)
        object.__setattr__(self, "x_next", xn)

    def __len__(self) -> int:
        return self.xs.shape[0]

    @property
    def n_samples(self) -> int:
        return self.xs.shape[0]

    @property
    def state_dim(self) -> int:
        return self.xs.shape[1]

    @property
    def input_dim(self) -> int:
        return self.us.shape[1]

    def sample(self, i: int) -> TransitionSample:
        return TransitionSample(self.xs[i], self.us[i], self.x_next[i])

    @cached_property
    def samples(self) -> tuple[TransitionSample, ...]:
        return tuple(self.sample(i) for i in range(len(self)))

    @classmethod
    def from_samples(cls, samples, bounds: Bounds | None = None) -> "Dataset":
        samples = list(samples)
        if not samples:
            raise DataError("dataset must contain at least one sample")
        xs = np.stack([s.x for s in samples])
        us = np.stack([s.u for s in samples])
        xn = np.stack([s.x_next for s in samples])
        return cls(xs, us, xn, bounds)


def meta_path(csv_path) -> Path:
    """Sidecar path for a dataset CSV: dataset.csv -> dataset.meta.json."""
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def _fmt(v: float) -> str:
    # repr() of a Python float is the shortest string that round-trips,
    # so save/load is bit-exact.
    return repr(float(v))


def save_dataset(ds: Dataset, path, meta: dict | None = None) -> Path:
    """Write dataset CSV plus its JSON sidecar; returns the CSV path.

    Columns are x0..x{d-1}, u0..u{m-1}, xn0..xn{d-1}.  The sidecar records
    dimensions, bounds and whatever generation metadata the caller passes.
    """
    path = Path(path)
    d, m = ds.state_dim, ds.input_dim
    header = (
        [f"x{k}" for k in range(d)]
        + [f"u{k}" for k in range(m)]
        + [f"xn{k}" for k in range(d)]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(ds)):
            row = (
                [_fmt(v) for v in ds.xs[i]]
                + [_fmt(v) for v in ds.us[i]]
                + [_fmt(v) for v in ds.x_next[i]]
            )
            w.writerow(row)
    side = {"state_dim": d, "input_dim": m, "n_samples": len(ds)}
    if ds.bounds is not None:
        side["bounds"] = ds.bounds.to_json()
    if meta:
        side.update(meta)
    with open(meta_path(path), "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_dataset(path) -> tuple[Dataset, dict]:
    """Read a dataset CSV and its sidecar; returns (dataset, meta)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    mp = meta_path(path)
    if not mp.exists():
        raise DataError(f"dataset sidecar not found: {mp}")
    with open(mp) as fh:
        meta = json.load(fh)
    try:
        d = int(meta["state_dim"])
        m = int(meta["input_dim"])
    except KeyError as exc:
        raise DataError(f"sidecar {mp} is missing {exc}")
    expected = (
        [f"x{k}" for k in range(d)]
        + [f"u{k}" for k in range(m)]
        + [f"xn{k}" for k in range(d)]
    )
    rows = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != expected:
            raise DataError(f"unexpected dataset header in {path}: {header}")
        for line in r:
            if len(line) != len(expected):
                raise DataError(f"malformed dataset row in {path}: {line}")
            try:
                rows.append([float(v) for v in line])
            except ValueError:
                raise DataError(f"non-numeric dataset row in {path}: {line}")
    if not rows:
        raise DataError(f"dataset {path} has no samples")
    arr = np.asarray(rows, dtype=np.float64)
    bounds = Bounds.from_json(meta["bounds"]) if "bounds" in meta else None
    ds = Dataset(arr[:, :d], arr[:, d : d + m], arr[:, d + m :], bounds)
    return ds, meta
