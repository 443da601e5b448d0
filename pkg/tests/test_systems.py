import numpy as np
import pytest

from datactrl.core import DataError, distance
from datactrl import systems
from datactrl.systems import (
    SamplingConfig,
    equilibria,
    equilibrium_input,
    h_diode,
    make_system,
    sample_dataset,
    step,
    step_many,
    system_from_meta,
    system_matrices,
    sampling_meta,
)


def test_mass_spring_matrices():
    spec = make_system("mass_spring")
    A, B = system_matrices(spec)
    np.testing.assert_allclose(A, [[1.0, 0.1], [-0.2, 0.7]], atol=1e-15)
    np.testing.assert_allclose(B, [[0.0], [0.2]], atol=1e-15)
    # spectral norm of A: the true state Lipschitz constant of the step map
    assert np.linalg.norm(A, 2) == pytest.approx(1.0212477, abs=1e-6)


def test_mass_spring_step_known_value():
    spec = make_system("mass_spring")
    np.testing.assert_allclose(step(spec, [1.0, 0.0], [0.0]), [1.0, -0.2], atol=1e-15)
    # x' = A x + B u for a generic point
    A, B = system_matrices(spec)
    x, u = np.array([0.3, -0.4]), np.array([0.25])
    np.testing.assert_allclose(step(spec, x, u), A @ x + B @ u, atol=1e-15)


def test_vanderpol_step_formula():
    spec = make_system("vanderpol")
    y, yd, u = 0.4, -0.3, 0.2
    out = step(spec, [y, yd], [u])
    dt, mu = spec.dt, spec.params["damping"]
    assert out[0] == pytest.approx(y + dt * yd, abs=1e-15)
    assert out[1] == pytest.approx(yd + dt * (-y - mu * (1 - y * y) * yd + u), abs=1e-15)


def test_h_diode_known_values():
    assert h_diode(0.0) == 0.0
    assert h_diode(1.0) == pytest.approx(1.0, abs=1e-12)  # coefficients sum to 1
    assert h_diode(0.5) == pytest.approx(0.106875, abs=1e-12)
    np.testing.assert_allclose(h_diode(np.array([0.0, 1.0])), [0.0, 1.0], atol=1e-12)


def test_tunnel_diode_step_formula():
    spec = make_system("tunnel_diode")
    p = spec.params
    x1, x2, u = 0.9, 0.2, p["bias"]
    out = step(spec, [x1, x2], [u])
    assert out[0] == pytest.approx(x1 + p["cap_rate"] * (-h_diode(x1) + x2) * spec.dt, abs=1e-15)
    assert out[1] == pytest.approx(
        x2 + p["ind_rate"] * (-x1 - p["resistance"] * x2 + u) * spec.dt, abs=1e-15)


def test_equilibria_are_fixed_points():
    for sid in ("mass_spring", "vanderpol", "tunnel_diode"):
        spec = make_system(sid)
        u_eq = equilibrium_input(spec)
        for x_eq in equilibria(spec):
            assert distance(step(spec, x_eq, u_eq), x_eq) < 1e-12


def test_tunnel_diode_equilibria_locations():
    spec = make_system("tunnel_diode")
    eqs = equilibria(spec)
    assert len(eqs) == 3
    # saddle, then the two stable points; x1 values as published (rounded)
    assert eqs[0][0] == pytest.approx(0.285, abs=2e-3)
    assert eqs[1][0] == pytest.approx(0.063, abs=2e-3)
    assert eqs[2][0] == pytest.approx(0.884, abs=2e-3)
    # x2 follows from the load line
    for eq in eqs:
        assert eq[1] == pytest.approx((spec.params["bias"] - eq[0]) / spec.params["resistance"], abs=1e-12)


def test_make_system_bounds():
    assert make_system("mass_spring").input_bounds.low[0] == -1.0
    assert make_system("vanderpol").input_bounds.high[0] == 0.5
    diode = make_system("tunnel_diode")
    assert diode.input_bounds.low[0] == diode.input_bounds.high[0] == 1.2
    auto = make_system("mass_spring_autonomous")
    assert auto.input_bounds.low[0] == auto.input_bounds.high[0] == 0.0
    with pytest.raises(DataError):
        make_system("pendulum")
    with pytest.raises(DataError):
        make_system("mass_spring", params={"gravity": 9.8})


def test_step_validates_and_clamps():
    spec = make_system("mass_spring")
    with pytest.raises(DataError):
        step(spec, [1.0, 0.0, 0.0], [0.0])
    # inputs outside the box are clamped to its surface
    np.testing.assert_allclose(step(spec, [0.0, 0.0], [5.0]), step(spec, [0.0, 0.0], [1.0]))


def test_sampling_reproducible_and_bounded():
    spec = make_system("mass_spring")
    cfg = SamplingConfig(n_samples=300, seed=11)
    ds1 = sample_dataset(spec, cfg)
    ds2 = sample_dataset(spec, cfg)
    np.testing.assert_array_equal(ds1.xs, ds2.xs)
    np.testing.assert_array_equal(ds1.us, ds2.us)
    np.testing.assert_array_equal(ds1.x_next, ds2.x_next)
    assert len(ds1) == 300
    assert spec.state_bounds.contains(ds1.xs).all()
    assert spec.state_bounds.contains(ds1.x_next).all()
    assert spec.input_bounds.contains(ds1.us).all()
    # different seed, different data
    assert not np.array_equal(ds1.xs, sample_dataset(spec, SamplingConfig(300, seed=12)).xs)


def test_sampling_chains_transitions():
    spec = make_system("mass_spring")
    ds = sample_dataset(spec, SamplingConfig(n_samples=40, max_traj_len=40, seed=1))
    # within one trajectory the successor of step t is the state of step t+1
    chained = np.all(ds.x_next[:-1] == ds.xs[1:], axis=1)
    assert chained.sum() >= 30  # breaks only at trajectory resets


def test_autonomous_and_constant_input_sampling():
    auto = sample_dataset(make_system("vanderpol_autonomous"), SamplingConfig(100, seed=0))
    assert np.all(auto.us == 0.0)
    diode = sample_dataset(make_system("tunnel_diode"), SamplingConfig(100, seed=0))
    assert np.all(diode.us == 1.2)


def test_step_many_matches_step():
    spec = make_system("vanderpol")
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, (20, 2))
    U = rng.uniform(-0.5, 0.5, (20, 1))
    batch = step_many(spec, X, U)
    for k in range(20):
        np.testing.assert_array_equal(batch[k], step(spec, X[k], U[k]))


def test_system_meta_roundtrip():
    spec = make_system("tunnel_diode", dt=0.05)
    meta = sampling_meta(spec, SamplingConfig(10, seed=4))
    again = system_from_meta(meta)
    assert again.id == spec.id
    assert again.dt == 0.05
    assert again.params == spec.params
    with pytest.raises(DataError):
        system_from_meta({"system": {"name": "nope"}})
