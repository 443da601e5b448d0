"""Benchmark discrete-time systems and the random-policy trajectory sampler.

Three plants, each integrated with an explicit Euler step of size dt:

* mass_spring           damped mass-spring with force input (linear)
* vanderpol             oscillator with nonlinear damping and force input
* tunnel_diode          diode circuit in scaled units with a constant bias

``*_autonomous`` variants pin the input box to [0, 0] so sampled controls
are identically zero.  The tunnel diode keeps a degenerate input box
[1.2, 1.2], i.e. a constant bias voltage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, Box, DataError, Dataset, State, as_state

SYSTEM_IDS = (
    "mass_spring",
    "mass_spring_autonomous",
    "vanderpol",
    "vanderpol_autonomous",
    "tunnel_diode",
)

RNG_ALGORITHM = "numpy-PCG64"

_DEFAULTS = {
    "mass_spring": dict(mass=0.5, stiffness=1.0, damping=1.5),
    "vanderpol": dict(damping=0.5),
    "tunnel_diode": dict(cap_rate=0.5, ind_rate=0.2, resistance=1.5, bias=1.2),
}

# quintic diode characteristic, coefficients for x^1 .. x^5
_H_COEFFS = (17.76, -103.79, 229.62, -226.31, 83.72)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Immutable description of one benchmark instance."""

    id: str
    params: dict
    dt: float
    state_bounds: Box
    input_bounds: Box

    @property
    def base_id(self) -> str:
        return self.id.replace("_autonomous", "")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "params": dict(self.params),
            "dt": self.dt,
            "state_bounds": self.state_bounds.to_json(),
            "input_bounds": self.input_bounds.to_json(),
        }


def make_system(system_id: str, *, dt: float | None = None, params: dict | None = None) -> SystemSpec:
    """Build a SystemSpec with benchmark defaults, optionally overridden."""
    if system_id not in SYSTEM_IDS:
        raise DataError(f"unknown system id {system_id!r}, expected one of {SYSTEM_IDS}")
    base = system_id.replace("_autonomous", "")
    p = dict(_DEFAULTS[base])
    if params:
        unknown = set(params) - set(p)
        if unknown:
            raise DataError(f"unknown parameters for {system_id}: {sorted(unknown)}")
        p.update({k: float(v) for k, v in params.items()})
    step_dt = 0.1 if dt is None else float(dt)
    if step_dt <= 0:
        raise DataError(f"dt must be positive, got {step_dt}")
    if base == "mass_spring":
        state = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        inp = Box(np.array([-1.0]), np.array([1.0]))
    elif base == "vanderpol":
        state = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        inp = Box(np.array([-0.5]), np.array([0.5]))
    else:  # tunnel_diode
        state = Box(np.array([-0.3, -0.3]), np.array([1.4, 1.4]))
        inp = Box(np.array([p["bias"]]), np.array([p["bias"]]))
    if system_id.endswith("_autonomous"):
        inp = Box(np.zeros(inp.dim), np.zeros(inp.dim))
    return SystemSpec(system_id, p, step_dt, state, inp)


def system_matrices(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) of the discrete-time mass-spring update x' = A x + B u."""
    if spec.base_id != "mass_spring":
        raise DataError(f"{spec.id} is not a linear benchmark")
    m = spec.params["mass"]
    k = spec.params["stiffness"]
    rho = spec.params["damping"]
    dt = spec.dt
    A = np.array([[1.0, dt], [-(k / m) * dt, 1.0 - (rho / m) * dt]])
    B = np.array([[0.0], [dt / m]])
    return A, B


def h_diode(x1):
    """Diode characteristic: quintic polynomial evaluated as the written power sum."""
    x1 = np.asarray(x1, dtype=np.float64)
    out = np.zeros_like(x1)
    for k, coeff in enumerate(_H_COEFFS, start=1):
        out = out + coeff * x1**k
    return out if out.ndim else float(out)


def _h_diode_deriv(x1: float) -> float:
    return sum(k * c * x1 ** (k - 1) for k, c in enumerate(_H_COEFFS, start=1))


def step_many(spec: SystemSpec, X: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Vectorised transition map.  X: (..., d), U: (..., m); no validation."""
    dt = spec.dt
    p = spec.params
    if spec.base_id == "mass_spring":
        A, B = system_matrices(spec)
        return X @ A.T + U @ B.T
    if spec.base_id == "vanderpol":
        y = X[..., 0]
        yd = X[..., 1]
        u = U[..., 0]
        y2 = y + dt * yd
        yd2 = yd + dt * (-y - p["damping"] * (1.0 - y * y) * yd + u)
        return np.stack([y2, yd2], axis=-1)
    # tunnel_diode
    x1 = X[..., 0]
    x2 = X[..., 1]
    u = U[..., 0]
    x1n = x1 + p["cap_rate"] * (-h_diode(x1) + x2) * dt
    x2n = x2 + p["ind_rate"] * (-x1 - p["resistance"] * x2 + u) * dt
    return np.stack([x1n, x2n], axis=-1)


def step(spec: SystemSpec, x, u) -> State:
    """Single transition.  Inputs are clamped into the input box; a
    non-finite successor (numerical blow-up outside the intended domain)
    raises DataError."""
    xv = as_state(x)
    uv = np.clip(as_state(u), spec.input_bounds.low, spec.input_bounds.high)
    if xv.shape[0] != spec.state_bounds.dim:
        raise DataError(f"state dimension {xv.shape[0]} does not match {spec.id}")
    out = step_many(spec, xv[None, :], uv[None, :])[0]
    if not np.all(np.isfinite(out)):
        raise DataError(f"transition produced non-finite state from x={xv}, u={uv}")
    return as_state(out)


def equilibrium_input(spec: SystemSpec) -> np.ndarray:
    """Input under which the published equilibria are fixed points."""
    if spec.base_id == "tunnel_diode":
        return np.array([spec.params["bias"]])
    return np.zeros(spec.input_bounds.dim)


def equilibria(spec: SystemSpec) -> list[State]:
    """Fixed points of the step map under the equilibrium input.

    The diode circuit has three, found by Newton refinement of
    x1 + R*h(x1) - bias = 0 from coarse seeds.  The first is the saddle
    separating the basins of the other two (both stable).
    """
    if spec.base_id in ("mass_spring", "vanderpol"):
        return [as_state([0.0, 0.0])]
    p = spec.params
    R, bias = p["resistance"], p["bias"]
    out = []
    for seed in (0.285, 0.063, 0.884):
        x1 = seed
        for _ in range(60):
            f = x1 + R * h_diode(x1) - bias
            df = 1.0 + R * _h_diode_deriv(x1)
            dx = f / df
            x1 -= dx
            if abs(dx) < 1e-15:
                break
        out.append(as_state([x1, (bias - x1) / R]))
    return out


@dataclass(frozen=True)
class SamplingConfig:
    """Random exploration settings for sample_dataset."""

    n_samples: int
    max_traj_len: int = 50
    seed: int = 0
    policy: str = "uniform_random"


def sample_dataset(spec: SystemSpec, cfg: SamplingConfig) -> Dataset:
    """Collect transitions by rolling out uniformly random controls.

    Initial states are uniform over the state box.  A trajectory ends when
    it reaches max_traj_len transitions or when the successor leaves the
    state box; the out-of-bounds transition is discarded.  Each trajectory
    draws from its own child stream of the top-level seed, so datasets are
    reproducible bit-for-bit and insensitive to trajectory batching.
    """
    if cfg.policy != "uniform_random":
        raise DataError(f"unknown sampling policy {cfg.policy!r}")
    if cfg.n_samples < 1:
        raise DataError("n_samples must be >= 1")
    if cfg.max_traj_len < 1:
        raise DataError("max_traj_len must be >= 1")
    sbox, ibox = spec.state_bounds, spec.input_bounds
    xs, us, xns = [], [], []
    traj = 0
    while len(xs) < cfg.n_samples:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(traj,)))
        x = rng.uniform(sbox.low, sbox.high)
        for _ in range(cfg.max_traj_len):
            u = rng.uniform(ibox.low, ibox.high)
            xn = step_many(spec, x[None, :], u[None, :])[0]
            if not bool(np.all(xn >= sbox.low) and np.all(xn <= sbox.high)):
                break  # left the box (or went non-finite); do not record
            xs.append(x)
            us.append(u)
            xns.append(xn)
            x = xn
            if len(xs) == cfg.n_samples:
                break
        traj += 1
    bounds = Bounds(state=sbox, input=ibox)
    return Dataset(np.asarray(xs), np.asarray(us), np.asarray(xns), bounds)


def sampling_meta(spec: SystemSpec, cfg: SamplingConfig) -> dict:
    """Sidecar metadata describing how a dataset was generated."""
    return {
        "system": spec.to_json(),
        "seed": cfg.seed,
        "max_traj_len": cfg.max_traj_len,
        "policy": cfg.policy,
        "rng": RNG_ALGORITHM + "-per-trajectory-spawn",
        "reset_rule": "reset on max_traj_len or when the successor leaves the state box",
    }


def system_from_meta(meta: dict) -> SystemSpec:
    """Rebuild the generating SystemSpec from dataset sidecar metadata."""
    try:
        sysinfo = meta["system"]
        return make_system(sysinfo["id"], dt=sysinfo.get("dt"), params=sysinfo.get("params"))
    except (KeyError, TypeError) as exc:
        raise DataError(f"sidecar metadata does not describe a known system: {exc}")
