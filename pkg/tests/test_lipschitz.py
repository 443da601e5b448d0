import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datactrl import neighbors
from datactrl.core import Bounds, Box, DataError, Dataset
from datactrl.lipschitz import (
    ConstraintPair,
    build_constraints,
    estimate_all,
    kkt_certificate,
    solve_lcqp,
    _screen_triples,
)
from oracle_qp import grid_optimum, random_instance


def _cons(rows):
    return [ConstraintPair(a, b, c) for a, b, c in rows]


def test_constraint_pair_rejects_negative_coefficients():
    with pytest.raises(ValueError):
        ConstraintPair(-0.1, 0.5, 0.2)
    with pytest.raises(ValueError):
        ConstraintPair(0.1, 0.5, -0.2)


def test_solve_lcqp_hand_instances():
    # no constraints -> origin
    assert solve_lcqp([]) == (0.0, 0.0)
    # single vertical constraint: L_x >= 0.5
    assert solve_lcqp(_cons([(1.0, 0.0, 0.5)])) == pytest.approx((0.5, 0.0))
    # single horizontal constraint: L_u >= 0.7
    assert solve_lcqp(_cons([(0.0, 1.0, 0.7)])) == pytest.approx((0.0, 0.7))
    # 45-degree line x + y >= 1: perpendicular foot (0.5, 0.5)
    assert solve_lcqp(_cons([(1.0, 1.0, 1.0)])) == pytest.approx((0.5, 0.5))
    # two axis-aligned constraints pin the corner
    assert solve_lcqp(_cons([(1.0, 0.0, 1.0), (0.0, 1.0, 1.0)])) == pytest.approx((1.0, 1.0))
    # slack constraint does not move the optimum
    assert solve_lcqp(_cons([(1.0, 1.0, 1.0), (1.0, 1.0, 0.2)])) == pytest.approx((0.5, 0.5))
    # c = 0 constraints are satisfied at the origin
    assert solve_lcqp(_cons([(0.3, 0.4, 0.0)])) == (0.0, 0.0)


def test_solve_lcqp_rejects_unscreened_degenerate():
    with pytest.raises(ValueError):
        solve_lcqp(_cons([(0.0, 0.0, 0.5)]))


def test_solve_lcqp_matches_grid_oracle():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        a, b, c = random_instance(rng)
        sol = solve_lcqp(_cons(zip(a, b, c)))
        ref = grid_optimum(a, b, c)
        assert ref is not None
        worst = max(worst, abs(sol[0] - ref[0]), abs(sol[1] - ref[1]))
    assert worst <= 2e-4


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solve_lcqp_minimality_property(seed):
    """The optimum is feasible, and shrinking it makes it infeasible."""
    rng = np.random.default_rng(seed)
    a, b, c = random_instance(rng)
    lx, lu = solve_lcqp(_cons(zip(a, b, c)))
    resid = c - (a * lx + b * lu)
    assert resid.max() <= 1e-9 * max(1.0, c.max())
    if max(lx, lu) > 1e-12 and c.max() > 1e-12:
        sx, su = 0.999 * lx, 0.999 * lu
        assert (c - (a * sx + b * su)).max() > 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kkt_certificate_accepts_optimum_rejects_shifts(seed):
    rng = np.random.default_rng(seed)
    a, b, c = random_instance(rng)
    cons = _cons(zip(a, b, c))
    lx, lu = solve_lcqp(cons)
    violation, stationary = kkt_certificate(cons, lx, lu)
    assert violation <= 1e-9 * max(1.0, c.max())
    assert stationary
    # a clearly interior point is feasible but not stationary
    violation, stationary = kkt_certificate(cons, lx + 1.0, lu + 1.0)
    assert violation == 0.0
    assert not stationary


def test_kkt_certificate_flags_infeasible_point():
    cons = _cons([(1.0, 0.0, 1.0)])
    violation, _ = kkt_certificate(cons, 0.2, 0.0)
    assert violation == pytest.approx(0.8)


def test_screen_triples_drops_degenerate_and_raises_on_inconsistent():
    a = np.array([0.5, 0.0])
    b = np.array([0.1, 0.0])
    c = np.array([0.4, 0.0])
    sa, sb, sc = _screen_triples(a, b, c)
    assert sa.tolist() == [0.5]
    bad_c = np.array([0.4, 0.3])
    with pytest.raises(DataError):
        _screen_triples(a, b, bad_c)


def _line_dataset():
    """Seven samples of the scalar map x' = 0.5 x + 0.25 u on a short line."""
    xs = np.linspace(0.0, 0.6, 7)[:, None]
    us = np.linspace(-0.3, 0.3, 7)[:, None]
    xn = 0.5 * xs + 0.25 * us
    return Dataset(xs, us, xn)


def test_build_constraints_counts_and_values():
    ds = _line_dataset()
    index = neighbors.build(ds.xs)
    cons = build_constraints(ds, 0, 0.25, index)
    # neighborhood = {0, 1, 2} (spacing 0.1), three unordered pairs
    assert len(cons) == 3
    first = cons[0]
    assert first.a == pytest.approx(0.1)
    assert first.b == pytest.approx(0.1)
    assert first.c == pytest.approx(0.5 * 0.1 + 0.25 * 0.1)
    # solving them recovers constants consistent with (0.5, 0.25) growth
    lx, lu = solve_lcqp(cons)
    assert lx * 0.1 + lu * 0.1 == pytest.approx(0.075, abs=1e-12)


def test_build_constraints_validates_arguments():
    ds = _line_dataset()
    index = neighbors.build(ds.xs)
    with pytest.raises(DataError):
        build_constraints(ds, 99, 0.25, index)
    with pytest.raises(ValueError):
        build_constraints(ds, 0, 0.0, index)
    # isolated sample -> no constraints
    assert build_constraints(ds, 0, 1e-6, index) == []


def test_estimate_all_validates_delta():
    ds = _line_dataset()
    with pytest.raises(ValueError):
        estimate_all(ds, -0.1)


def test_estimate_all_matches_direct_solver(ms_small):
    """The screened batch path must reproduce the dense per-sample QP exactly."""
    index = neighbors.build(ms_small.xs)
    ests = estimate_all(ms_small, 0.2, index=index)
    assert len(ests) == len(ms_small)
    rng = np.random.default_rng(11)
    for i in rng.choice(len(ms_small), size=25, replace=False):
        cons = build_constraints(ms_small, int(i), 0.2, index)
        if not cons:
            assert ests[i].fallback_used
            continue
        ref = solve_lcqp(cons)
        assert ests[i].L_x_hat == pytest.approx(ref[0], abs=1e-9)
        assert ests[i].L_u_hat == pytest.approx(ref[1], abs=1e-9)
        assert not ests[i].fallback_used


def test_estimate_all_threads_do_not_change_results(ms_small):
    index = neighbors.build(ms_small.xs)
    one = estimate_all(ms_small, 0.2, index=index)
    two = estimate_all(ms_small, 0.2, index=index, threads=2)
    for e1, e2 in zip(one, two):
        assert e1.L_x_hat == e2.L_x_hat
        assert e1.L_u_hat == e2.L_u_hat
        assert e1.fallback_used == e2.fallback_used


def test_estimate_all_autonomous_data_has_zero_lu():
    rng = np.random.default_rng(5)
    xs = rng.uniform(-1.0, 1.0, size=(120, 2))
    us = np.zeros((120, 1))
    xn = 0.8 * xs
    ds = Dataset(xs, us, xn)
    ests = estimate_all(ds, 0.5)
    assert all(e.L_u_hat == 0.0 for e in ests if not e.fallback_used)
    med = np.median([e.L_x_hat for e in ests if not e.fallback_used])
    assert med == pytest.approx(0.8, abs=1e-6)


def test_estimate_all_flags_isolated_samples():
    xs = np.array([[0.0, 0.0], [0.01, 0.0], [5.0, 5.0]])
    us = np.array([[0.0], [0.1], [0.2]])
    xn = 0.5 * xs
    ds = Dataset(xs, us, xn)
    ests = estimate_all(ds, 0.05)
    assert not ests[0].fallback_used and not ests[1].fallback_used
    assert ests[2].fallback_used
    assert ests[2].n_neighbors == 1  # only itself in range


def test_estimate_all_rejects_inconsistent_duplicates():
    xs = np.array([[0.0, 0.0], [0.0, 0.0], [0.1, 0.0]])
    us = np.array([[0.2], [0.2], [0.0]])
    xn = np.array([[0.1, 0.0], [0.3, 0.0], [0.05, 0.0]])
    ds = Dataset(xs, us, xn)
    with pytest.raises(DataError):
        estimate_all(ds, 0.5)


def test_estimate_all_accepts_consistent_duplicates():
    xs = np.array([[0.0, 0.0], [0.0, 0.0], [0.1, 0.0]])
    us = np.array([[0.2], [0.2], [0.0]])
    xn = np.array([[0.1, 0.0], [0.1, 0.0], [0.05, 0.0]])
    ds = Dataset(xs, us, xn)
    ests = estimate_all(ds, 0.5)
    assert len(ests) == 3


def test_benchmark_scale_median_and_exactness(ms_dataset, ms_index, ms_lipschitz):
    """Median of the benchmark run sits near the true state constant and two
    spot samples agree with the dense solver."""
    ests, _ = ms_lipschitz
    lx = np.array([e.L_x_hat for e in ests])
    assert 0.93 <= float(np.median(lx)) <= 1.03
    for i in (123, 4321):
        cons = build_constraints(ms_dataset, i, 0.2, ms_index)
        ref = solve_lcqp(cons)
        assert ests[i].L_x_hat == pytest.approx(ref[0], abs=1e-9)
        assert ests[i].L_u_hat == pytest.approx(ref[1], abs=1e-9)
