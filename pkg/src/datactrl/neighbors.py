"""k-d tree over point sets with exact closed-ball radius queries.

The tree exists purely to speed up fixed-radius neighbor lookups; results
are defined to be identical to a brute-force linear scan, including points
at exactly the query radius.  Leaf buckets are compared with the same
vectorised norm expression a scan would use, and internal planes are pruned
with a small conservative slack so rounding can only cause extra visits,
never a miss.
"""

from __future__ import annotations

import numpy as np

from .core import DataError, DimensionMismatchError

_LEAF_SIZE = 32


class _Leaf:
    __slots__ = ("idx",)

    def __init__(self, idx):
        self.idx = idx


class _Split:
    __slots__ = ("axis", "value", "left", "right")

    def __init__(self, axis, value, left, right):
        self.axis = axis
        self.value = value
        self.left = left
        self.right = right


class SpatialIndex:
    """Immutable fixed-radius query structure over an (n, d) point set."""

    __slots__ = ("points", "_root")

    def __init__(self, points: np.ndarray, root):
        self.points = points
        self._root = root

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def query_radius(self, center, radius: float) -> np.ndarray:
        return query_radius(self, center, radius)


def _build_node(points: np.ndarray, idx: np.ndarray, depth: int):
    if idx.shape[0] <= _LEAF_SIZE:
        return _Leaf(idx)
    axis = depth % points.shape[1]
    coords = points[idx, axis]
    order = np.argsort(coords, kind="stable")
    split = coords[order[(idx.shape[0] - 1) // 2]]
    left_mask = coords <= split  # ties go left
    if left_mask.all():
        # median equals the maximum: splitting cannot make progress
        return _Leaf(idx)
    return _Split(
        axis,
        float(split),
        _build_node(points, idx[left_mask], depth + 1),
        _build_node(points, idx[~left_mask], depth + 1),
    )


def build(points) -> SpatialIndex:
    """Build an index over the rows of ``points`` (copied and frozen)."""
    pts = np.array(points, dtype=np.float64, copy=True)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise DataError(f"need a non-empty (n, d) point set, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DataError("points must be finite")
    pts.flags.writeable = False
    root = _build_node(pts, np.arange(pts.shape[0], dtype=np.int64), 0)
    return SpatialIndex(pts, root)


def query_radius(index: SpatialIndex, center, radius: float) -> np.ndarray:
    """Indices (ascending) of all points with d(p, center) <= radius.

    Equivalent to ``np.linalg.norm(points - center, axis=1) <= radius``.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    c = np.asarray(center, dtype=np.float64)
    if c.shape != (index.dim,):
        raise DimensionMismatchError(
            f"query center shape {c.shape} does not match index dim {index.dim}"
        )
    pts = index.points
    # Plane pruning is conservative: any point passing the exact leaf test
    # has axis gap <= its norm, and float evaluation of either side can
    # drift by a few ulp at most, far below this slack.
    slack = 1e-9 * (1.0 + radius)
    cand = []
    stack = [index._root]
    while stack:
        node = stack.pop()
        if isinstance(node, _Leaf):
            cand.append(node.idx)
            continue
        gap = c[node.axis] - node.value
        if gap <= radius + slack:  # left half holds coords <= split value
            stack.append(node.left)
        if -gap <= radius + slack:  # right half holds coords > split value
            stack.append(node.right)
    if not cand:
        return np.empty(0, dtype=np.int64)
    idx = np.concatenate(cand)
    # one batched evaluation of the exact scan predicate over all candidates
    out = idx[np.linalg.norm(pts[idx] - c, axis=1) <= radius]
    out.sort()
    return out
