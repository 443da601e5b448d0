"""Degree-of-controllability reports, parameter sweeps and rollout checks.

The degree of controllability (DOC) of a dataset with respect to a target
is the fraction of its states found controllable.  Sweeps re-run one of the
two testers (tree search or reachability graph) across tolerances or a
grid of targets.  ``verify_ball_by_rollout`` closes the loop with the
simulator: probe states drawn from a tree ball are driven by the stored
control path and must land inside the target ball.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ferf, lipschitz, mecs, neighbors, systems
from .core import Box, DataError, Dataset, as_state

METHODS = ("mecs", "ferf")

# Replayed probes may miss the closed target ball by accumulated float
# rounding even when the exact-arithmetic guarantee holds; this allowance
# is far below any epsilon used in practice.
ROLLOUT_SLACK = 1e-9


@dataclass(frozen=True)
class DocReport:
    target: tuple
    epsilon: float
    method: str
    doc: float
    n_controllable: int
    n_total: int


@dataclass(frozen=True)
class SweepResult:
    axis: str  # "epsilon" or "target"
    points: tuple


def doc(controllable, ds: Dataset) -> float:
    """Fraction of dataset states in ``controllable`` (validated indices)."""
    idx = set(int(i) for i in controllable)
    if idx and (min(idx) < 0 or max(idx) >= len(ds)):
        raise DataError("controllable set contains out-of-range indices")
    return len(idx) / len(ds)


def _controllable_set(ds, x_T, eps, method, estimates, opts, succ_index, link_radius):
    if method == "mecs":
        res = mecs.run_mecs(ds, estimates, x_T, eps, opts, succ_index=succ_index)
        return res.controllable_indices
    return ferf.ferf_controllable(ds, x_T, eps, link_radius=link_radius)


def _report(ds, x_T, eps, method, cset):
    return DocReport(
        target=tuple(float(v) for v in np.asarray(x_T)),
        epsilon=float(eps),
        method=method,
        doc=doc(cset, ds),
        n_controllable=len(cset),
        n_total=len(ds),
    )


def epsilon_sweep(ds: Dataset, x_T, epsilons, method: str, *, estimates=None,
                  delta: float = 0.2, mecs_opts: mecs.MecsOptions | None = None,
                  link_radius: float | None = None, threads: int = 1) -> SweepResult:
    """DOC at a fixed target across ascending tolerances."""
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}")
    eps = [float(e) for e in epsilons]
    if not eps or any(e <= 0 for e in eps) or any(b <= a for a, b in zip(eps, eps[1:])):
        raise DataError("epsilons must be a strictly ascending positive sequence")
    target = as_state(x_T)
    succ_index = None
    if method == "mecs":
        if estimates is None:
            estimates = lipschitz.estimate_all(ds, delta, threads=threads)
        succ_index = neighbors.build(ds.x_next)

    def one(e):
        cset = _controllable_set(ds, target, e, method, estimates, mecs_opts,
                                 succ_index, link_radius)
        return (e, _report(ds, target, e, method, cset))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, eps))
    else:
        points = [one(e) for e in eps]
    return SweepResult(axis="epsilon", points=tuple(points))


def make_grid(box: Box, shape=(21, 21)) -> list[np.ndarray]:
    """Row-major list of grid targets covering a 2-D state box."""
    if box.dim != 2:
        raise DataError("target grids are only defined for 2-D state spaces")
    nx, ny = int(shape[0]), int(shape[1])
    if nx < 2 or ny < 2:
        raise DataError(f"grid shape must be at least 2x2, got {shape}")
    g0 = np.linspace(box.low[0], box.high[0], nx)
    g1 = np.linspace(box.low[1], box.high[1], ny)
    return [np.array([a, b]) for a in g0 for b in g1]


def target_grid_sweep(ds: Dataset, targets, epsilon: float, method: str, *, estimates=None,
                      delta: float = 0.2, mecs_opts: mecs.MecsOptions | None = None,
                      link_radius: float | None = None, threads: int = 1) -> SweepResult:
    """DOC at fixed epsilon across many targets.

    The graph method shares the dataset part of the reachability graph
    across all targets, which is what makes dense target maps tractable.
    """
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}")
    tgts = [as_state(t) for t in targets]
    if not tgts:
        raise DataError("no targets given")
    if method == "ferf":
        sweeper = ferf.TargetSweeper(ds, epsilon, link_radius)

        def one(t):
            return (t, _report(ds, t, epsilon, method, sweeper.controllable(t)))
    else:
        if estimates is None:
            estimates = lipschitz.estimate_all(ds, delta, threads=threads)
        succ_index = neighbors.build(ds.x_next)

        def one(t):
            cset = _controllable_set(ds, t, epsilon, method, estimates, mecs_opts,
                                     succ_index, link_radius)
            return (t, _report(ds, t, epsilon, method, cset))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, tgts))
    else:
        points = [one(t) for t in tgts]
    return SweepResult(axis="target", points=tuple(points))


@dataclass(frozen=True)
class RolloutVerification:
    node_id: int
    final_dists: np.ndarray
    passes: np.ndarray
    n_probes: int
    n_pass: int

    @property
    def pass_rate(self) -> float:
        return self.n_pass / self.n_probes if self.n_probes else 1.0


def _sample_in_ball(center: np.ndarray, radius: float, n: int, rng) -> np.ndarray:
    """Uniform draws from a closed ball via rejection from its bounding box."""
    d = center.shape[0]
    if radius == 0.0:
        return np.tile(center, (n, 1))
    out = np.empty((n, d))
    have = 0
    while have < n:
        cand = rng.uniform(-radius, radius, size=(max(2 * (n - have), 8), d))
        keep = np.einsum("ij,ij->i", cand, cand) <= radius * radius
        take = cand[keep][: n - have]
        out[have : have + take.shape[0]] = center + take
        have += take.shape[0]
    return out


def verify_ball_by_rollout(result: mecs.MecsResult, node: mecs.TreeNode,
                           spec: systems.SystemSpec, ds: Dataset, n_probes: int = 10,
                           seed: int = 0) -> RolloutVerification:
    """Drive random probes from a ball along its control path into the target.

    Probes are uniform over the node's ball; each replays the stored
    controls (leaf to root) through the simulator and must end within
    epsilon of the target (plus ROLLOUT_SLACK for float rounding).
    """
    if n_probes < 1:
        raise DataError("n_probes must be >= 1")
    path = mecs.extract_control_path(result, node, ds)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(node.visit_index,)))
    X = _sample_in_ball(node.ball.center, node.ball.radius, n_probes, rng)
    for _, u in path:
        U = np.tile(u, (X.shape[0], 1))
        X = systems.step_many(spec, X, U)
    diff = X - result.x_T
    final = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    passes = final <= result.epsilon + ROLLOUT_SLACK
    return RolloutVerification(
        node_id=node.visit_index,
        final_dists=final,
        passes=passes,
        n_probes=n_probes,
        n_pass=int(passes.sum()),
    )


def verify_tree(result: mecs.MecsResult, spec: systems.SystemSpec, ds: Dataset,
                n_probes: int = 10, seed: int = 0) -> list[RolloutVerification]:
    """Rollout verification for every visited ball of a search result."""
    return [
        verify_ball_by_rollout(result, node, spec, ds, n_probes, seed)
        for node in result.visited
    ]
