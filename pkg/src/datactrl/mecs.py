"""Maximal-expansion controllable-set search over a transition dataset.

Starting from the root ball B(x_T, epsilon), the search repeatedly selects
the largest unexpanded ball B(z, sigma), finds every sample whose successor
x'_i lands inside it, and creates a child ball around x_i with radius

    r_i = min(delta, (sigma - d(x'_i, z)) / L_x_hat_i),

the one-step backpropagation bound: any state within r_i of x_i can be
steered into B(z, sigma) by replaying u_i, because the successor moves at
most L_x_hat_i * r_i away from x'_i.  Every state covered by a visited ball
is therefore steerable into the target ball in finitely many steps.

Bookkeeping details that keep the search finite and non-redundant:

* a per-sample record of the best radius achieved so far; a new ball at the
  same center must improve on it by more than ``improvement_tol``,
* optional pruning: a new ball contained in an existing ball is dropped,
  and existing unexpanded balls contained in a new ball are removed (the
  union of visited balls is unchanged by this, which is tested),
* zero-radius balls are kept as tree nodes (their center is still a
  controllable point) but are never expanded.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import neighbors
from .core import (
    TIE_TOLERANCE,
    DataError,
    Dataset,
    InvariantViolationError,
    State,
    StateBall,
    as_state,
)

# Estimates at or below this floor are treated as zero slope: the radius
# quotient would be infinite, so the cap delta applies directly.
L_FLOOR = 1e-9

IMPROVEMENT_TOL = 1e-6

# Hard stop: no benchmark run needs anywhere near this many expansions; a
# run that does indicates a bookkeeping bug rather than a hard instance.
_MAX_ITER_FACTOR = 50


@dataclass(eq=False)
class TreeNode:
    """One ball in the controllable tree."""

    ball: StateBall
    parent: "TreeNode | None"
    via_sample: int | None  # dataset index whose control reaches the parent ball
    depth: int
    node_id: int
    visit_index: int | None = None


@dataclass
class MecsOptions:
    prune: bool = True
    improvement_tol: float = IMPROVEMENT_TOL
    l_floor: float = L_FLOOR
    max_iterations: int | None = None  # default: 50 * n_samples


@dataclass(eq=False)
class MecsResult:
    visited: list[TreeNode]
    controllable_indices: frozenset[int]
    iterations: int
    expansion_counts: list[int]
    x_T: State
    epsilon: float
    n_samples: int

    @property
    def selected_radii(self) -> np.ndarray:
        return np.array([n.ball.radius for n in self.visited])


def evaluate_radius(sigma: float, dist_to_center: float, L_x_hat: float, delta: float,
                    l_floor: float = L_FLOOR) -> float:
    """Radius granted to a sample whose successor lies in the selected ball."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if dist_to_center < 0 or dist_to_center > sigma:
        raise ValueError(
            f"successor distance {dist_to_center} outside the selected ball radius {sigma}"
        )
    if L_x_hat <= l_floor:
        return float(delta)
    return float(min(delta, (sigma - dist_to_center) / L_x_hat))


class _BallStore:
    """Append-only centers/radii arrays with an alive mask, for vectorised
    containment checks against many balls at once."""

    def __init__(self, dim: int, tol: float):
        self._cap = 256
        self.centers = np.empty((self._cap, dim))
        self.radii = np.empty(self._cap)
        self.alive = np.zeros(self._cap, dtype=bool)
        self.n = 0
        self.tol = tol

    def add(self, center: np.ndarray, radius: float) -> int:
        if self.n == self._cap:
            self._cap *= 2
            for name in ("centers", "radii", "alive"):
                old = getattr(self, name)
                new = np.zeros((self._cap,) + old.shape[1:], dtype=old.dtype)
                new[: self.n] = old[: self.n]
                setattr(self, name, new)
        slot = self.n
        self.centers[slot] = center
        self.radii[slot] = radius
        self.alive[slot] = True
        self.n += 1
        return slot

    def kill(self, slot: int):
        self.alive[slot] = False

    def _dists(self, center: np.ndarray) -> np.ndarray:
        diff = self.centers[: self.n] - center
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def contains_ball(self, center: np.ndarray, radius: float) -> bool:
        """Is B(center, radius) inside any alive stored ball?"""
        if self.n == 0:
            return False
        d = self._dists(center)
        ok = (d + radius <= self.radii[: self.n] + self.tol) & self.alive[: self.n]
        return bool(ok.any())

    def contained_slots(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Alive slots whose ball lies inside B(center, radius)."""
        if self.n == 0:
            return np.empty(0, dtype=np.int64)
        d = self._dists(center)
        ok = (d + self.radii[: self.n] <= radius + self.tol) & self.alive[: self.n]
        return np.flatnonzero(ok)


def _radii_for(sigma, dists, lhat, delta, l_floor):
    safe = np.maximum(lhat, l_floor)
    r = np.minimum(delta, (sigma - dists) / safe)
    return np.where(lhat <= l_floor, delta, r)


def run_mecs(ds: Dataset, estimates, x_T, epsilon: float, opts: MecsOptions | None = None, *,
             succ_index: neighbors.SpatialIndex | None = None,
             state_index_unused=None) -> MecsResult:
    """Grow the controllable tree until no unexpanded ball remains.

    ``estimates`` must be one LipschitzEstimate per sample, aligned with the
    dataset.  Prebuilt ``succ_index`` over ds.x_next can be passed when
    running many searches over one dataset.
    """
    opts = opts or MecsOptions()
    target = as_state(x_T)
    if target.shape[0] != ds.state_dim:
        raise DataError(f"target dimension {target.shape[0]} does not match dataset")
    if not epsilon > 0:
        raise DataError(f"epsilon must be positive, got {epsilon}")
    estimates = list(estimates)
    if len(estimates) != len(ds):
        raise DataError(
            f"need one Lipschitz estimate per sample: {len(estimates)} vs {len(ds)}"
        )
    lhat = np.array([e.L_x_hat for e in estimates])
    deltas = np.array([e.delta for e in estimates])
    if np.any(lhat < 0) or np.any(deltas <= 0):
        raise DataError("invalid Lipschitz estimates (negative L or nonpositive delta)")
    if succ_index is None:
        succ_index = neighbors.build(ds.x_next)
    max_iter = opts.max_iterations or _MAX_ITER_FACTOR * len(ds)

    leaf_store = _BallStore(ds.state_dim, TIE_TOLERANCE)
    vis_store = _BallStore(ds.state_dim, TIE_TOLERANCE)
    best_radius = np.full(len(ds), -np.inf)
    heap: list[tuple[float, int, int, TreeNode]] = []
    next_id = 0

    def _push(node: TreeNode) -> int:
        slot = leaf_store.add(node.ball.center, node.ball.radius)
        heapq.heappush(heap, (-node.ball.radius, node.node_id, slot, node))
        return slot

    root = TreeNode(StateBall(target, float(epsilon)), None, None, 0, next_id)
    next_id += 1
    _push(root)

    visited: list[TreeNode] = []
    expansion_counts: list[int] = []
    iterations = 0
    while heap:
        _, _, slot, node = heapq.heappop(heap)
        if not leaf_store.alive[slot]:
            continue  # pruned while waiting in the queue
        leaf_store.kill(slot)
        iterations += 1
        if iterations > max_iter:
            raise InvariantViolationError(
                f"search exceeded {max_iter} iterations; ball bookkeeping is broken"
            )
        node.visit_index = len(visited)
        visited.append(node)
        vis_store.add(node.ball.center, node.ball.radius)
        z = node.ball.center
        sigma = node.ball.radius
        count = 0
        if sigma > 0.0:
            cand = neighbors.query_radius(succ_index, z, sigma)
            count = int(cand.shape[0])
            if count:
                diff = ds.x_next[cand] - z
                dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
                rr = _radii_for(sigma, dists, lhat[cand], deltas[cand], opts.l_floor)
                good = rr > best_radius[cand] + opts.improvement_tol
                for i, r in zip(cand[good].tolist(), rr[good].tolist()):
                    best_radius[i] = r
                    if opts.prune and (
                        vis_store.contains_ball(ds.xs[i], r)
                        or leaf_store.contains_ball(ds.xs[i], r)
                    ):
                        continue
                    child = TreeNode(StateBall(ds.xs[i], r), node, i, node.depth + 1, next_id)
                    next_id += 1
                    if opts.prune:
                        for victim in leaf_store.contained_slots(ds.xs[i], r):
                            leaf_store.kill(int(victim))
                    _push(child)
        expansion_counts.append(count)

    result = MecsResult(
        visited=visited,
        controllable_indices=frozenset(),
        iterations=iterations,
        expansion_counts=expansion_counts,
        x_T=target,
        epsilon=float(epsilon),
        n_samples=len(ds),
    )
    result.controllable_indices = controllable_indices(result, ds)
    return result


def controllable_indices(result: MecsResult, ds: Dataset) -> frozenset[int]:
    """Dataset states covered by at least one visited ball.

    Chunked vectorised scan; membership semantics match ball_contains
    (closed balls, plain Euclidean distance).
    """
    if not result.visited:
        return frozenset()
    centers = np.stack([n.ball.center for n in result.visited])
    radii = np.array([n.ball.radius for n in result.visited])
    covered = np.zeros(len(ds), dtype=bool)
    chunk = 512
    for lo in range(0, centers.shape[0], chunk):
        cs = centers[lo : lo + chunk]
        rs = radii[lo : lo + chunk]
        diff = ds.xs[:, None, :] - cs[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        covered |= (d <= rs[None, :]).any(axis=1)
    return frozenset(int(i) for i in np.flatnonzero(covered))


def extract_control_path(result: MecsResult, node: TreeNode, ds: Dataset):
    """Replay recipe from ``node``'s ball to the root ball.

    Returns [(sample_index, control), ...] ordered leaf to root: applying
    the controls in order steers any state in the node's ball into the
    target ball.  The root yields an empty list.
    """
    if node.visit_index is None or node.visit_index >= len(result.visited) \
            or result.visited[node.visit_index] is not node:
        raise DataError("node does not belong to this search result")
    path = []
    cur = node
    while cur.parent is not None:
        path.append((cur.via_sample, np.array(ds.us[cur.via_sample])))
        cur = cur.parent
    return path
