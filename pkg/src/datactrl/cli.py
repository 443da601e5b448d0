"""Command-line entry points and the experiment pipeline.

Subcommands map one-to-one onto library stages (sample, estimate-lipschitz,
mecs, ferf, doc-sweep, doc-map, verify) plus ``run``, which executes a full
experiment from a JSON config and writes a manifest with content hashes of
every artifact.  Exit codes: 0 success, 1 usage error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, ferf, lipschitz, mecs, neighbors, systems
from .core import (
    DataError,
    DatactrlError,
    Dataset,
    InvariantViolationError,
    load_dataset,
    save_dataset,
)

CONFIG_SCHEMA_VERSION = 1

_FLOYD_WARN_VERTICES = 6000


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we reserve 2 for data errors
        raise _UsageError(message)


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_dataset_and_system(path):
    ds, meta = load_dataset(path)
    spec = systems.system_from_meta(meta) if "system" in meta else None
    return ds, meta, spec


def _parse_target(text: str, spec: systems.SystemSpec | None) -> np.ndarray:
    """Accept '0.1,0.2' literals or named equilibria like 'equ1'."""
    text = text.strip()
    if text.startswith("equ"):
        if spec is None:
            raise _UsageError(f"target {text!r} needs a dataset with system metadata")
        try:
            k = int(text[3:])
        except ValueError:
            raise _UsageError(f"bad equilibrium name {text!r}; expected equ0/equ1/...")
        eqs = systems.equilibria(spec)
        if not 0 <= k < len(eqs):
            raise _UsageError(f"{spec.id} has {len(eqs)} equilibria, asked for {text!r}")
        return eqs[k]
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise _UsageError(f"cannot parse target {text!r}")


def _write_lipschitz_csv(path: Path, estimates):
    _write_csv(
        path,
        ["index", "L_x_hat", "L_u_hat", "n_neighbors", "fallback"],
        [
            [e.sample_index, _fmt(e.L_x_hat), _fmt(e.L_u_hat), e.n_neighbors,
             int(e.fallback_used)]
            for e in estimates
        ],
    )


def _load_lipschitz_csv(path: Path, ds: Dataset, delta: float):
    if not Path(path).exists():
        raise DataError(f"lipschitz file not found: {path}")
    out = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != ["index", "L_x_hat", "L_u_hat", "n_neighbors", "fallback"]:
            raise DataError(f"unexpected lipschitz header in {path}: {header}")
        for row in r:
            out.append(
                lipschitz.LipschitzEstimate(
                    int(row[0]), float(row[1]), float(row[2]), delta, int(row[3]),
                    bool(int(row[4])),
                )
            )
    if len(out) != len(ds) or any(e.sample_index != i for i, e in enumerate(out)):
        raise DataError(f"lipschitz file {path} is not aligned with the dataset")
    return out


def _write_balls_csv(path: Path, result: mecs.MecsResult):
    d = result.x_T.shape[0]
    header = ["node_id", "parent_id", "via_sample", "iteration", "radius"] + [
        f"c{k}" for k in range(d)
    ]
    rows = []
    for node in result.visited:
        parent = node.parent.visit_index if node.parent is not None else -1
        via = node.via_sample if node.via_sample is not None else -1
        rows.append(
            [node.visit_index, parent, via, node.visit_index, _fmt(node.ball.radius)]
            + [_fmt(v) for v in node.ball.center]
        )
    _write_csv(path, header, rows)


def _rebuild_result(balls_path: Path, ds: Dataset, x_T, epsilon: float) -> mecs.MecsResult:
    """Reconstruct a search result from balls.csv for later verification."""
    if not balls_path.exists():
        raise DataError(f"balls file not found: {balls_path}")
    nodes: list[mecs.TreeNode] = []
    with open(balls_path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if not header or header[:5] != ["node_id", "parent_id", "via_sample", "iteration", "radius"]:
            raise DataError(f"unexpected balls header in {balls_path}: {header}")
        d = len(header) - 5
        for row in r:
            nid, parent_id, via = int(row[0]), int(row[1]), int(row[2])
            radius = float(row[4])
            center = np.array([float(v) for v in row[5 : 5 + d]])
            parent = nodes[parent_id] if parent_id >= 0 else None
            node = mecs.TreeNode(
                mecs.StateBall(center, radius), parent,
                via if via >= 0 else None,
                parent.depth + 1 if parent else 0, nid, visit_index=nid,
            )
            nodes.append(node)
    if not nodes:
        raise DataError(f"balls file {balls_path} is empty")
    result = mecs.MecsResult(
        visited=nodes, controllable_indices=frozenset(), iterations=len(nodes),
        expansion_counts=[], x_T=np.asarray(x_T, dtype=float), epsilon=float(epsilon),
        n_samples=len(ds),
    )
    result.controllable_indices = mecs.controllable_indices(result, ds)
    return result


def _write_controllable_csv(path: Path, cset, n: int):
    flags = np.zeros(n, dtype=int)
    for i in cset:
        flags[i] = 1
    _write_csv(path, ["index", "controllable"], [[i, int(f)] for i, f in enumerate(flags)])


def _write_sweep_csv(path: Path, sweep: analysis.SweepResult):
    rows = [
        [_fmt(param), _fmt(rep.doc), rep.n_controllable, rep.n_total]
        for param, rep in sweep.points
    ]
    _write_csv(path, ["param", "doc", "n_controllable", "n_total"], rows)


def _write_heatmap_csv(path: Path, sweep: analysis.SweepResult):
    rows = [
        [_fmt(t[0]), _fmt(t[1]), _fmt(rep.doc)]
        for t, rep in sweep.points
    ]
    _write_csv(path, ["tx0", "tx1", "doc"], rows)


def _write_verify_csv(path: Path, records):
    rows = []
    for rec in records:
        for p in range(rec.n_probes):
            rows.append(
                [rec.node_id, p, _fmt(rec.final_dists[p]), int(rec.passes[p])]
            )
    _write_csv(path, ["node_id", "probe", "final_dist", "pass"], rows)


def _write_snapshots(outdir: Path, result: mecs.MecsResult, every: int):
    for upto in range(every, len(result.visited), every):
        partial = mecs.MecsResult(
            visited=result.visited[:upto], controllable_indices=frozenset(),
            iterations=upto, expansion_counts=result.expansion_counts[:upto],
            x_T=result.x_T, epsilon=result.epsilon, n_samples=result.n_samples,
        )
        _write_balls_csv(outdir / f"snapshot_{upto:06d}.csv", partial)


# ---------------------------------------------------------------------------
# experiment configs


@dataclass
class ExperimentConfig:
    system_id: str
    dt: float | None
    params: dict | None
    n_samples: int
    max_traj_len: int
    seed: int
    delta: float
    epsilons: list[float]  # ascending; detail artifacts use the largest
    target: object  # np.ndarray, "equN" string, or ("grid", nx, ny)
    methods: list[str]
    verify_probes: int | None
    verify_seed: int
    snapshot_every: int | None
    link_radius: float | None

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise _UsageError("config must be a JSON object")
        if obj.get("schema_version") != CONFIG_SCHEMA_VERSION:
            raise _UsageError(
                f"config schema_version must be {CONFIG_SCHEMA_VERSION}, "
                f"got {obj.get('schema_version')!r}"
            )
        known = {
            "schema_version", "system", "sampling", "delta", "epsilon", "target",
            "method", "verify", "snapshot_every", "link_radius", "output_dir",
        }
        unknown = set(obj) - known
        if unknown:
            raise _UsageError(f"unknown config keys: {sorted(unknown)}")
        try:
            sysobj = obj["system"]
            system_id = sysobj["id"]
            sampling = obj["sampling"]
            n_samples = int(sampling["n_samples"])
            seed = int(sampling["seed"])
        except (KeyError, TypeError) as exc:
            raise _UsageError(f"config is missing required key: {exc}")
        max_traj_len = int(sampling.get("max_traj_len", 50))
        eps = obj.get("epsilon")
        if isinstance(eps, (int, float)):
            eps_list = [float(eps)]
        elif isinstance(eps, list) and eps:
            eps_list = [float(e) for e in eps]
        else:
            raise _UsageError("config epsilon must be a number or a non-empty list")
        if any(e <= 0 for e in eps_list) or sorted(eps_list) != eps_list:
            raise _UsageError("config epsilon values must be positive and ascending")
        target = obj.get("target")
        if isinstance(target, str) and target.startswith("equ"):
            tgt: object = target
        elif isinstance(target, list) and len(target) == 2:
            tgt = np.array([float(v) for v in target])
        elif isinstance(target, dict) and "grid" in target:
            nx, ny = target["grid"]
            tgt = ("grid", int(nx), int(ny))
        else:
            raise _UsageError(f"cannot interpret config target: {target!r}")
        method = obj.get("method", "mecs")
        if method == "both":
            methods = ["mecs", "ferf"]
        elif method in analysis.METHODS:
            methods = [method]
        else:
            raise _UsageError(f"config method must be mecs, ferf or both, got {method!r}")
        verify = obj.get("verify")
        return cls(
            system_id=system_id,
            dt=sysobj.get("dt"),
            params=sysobj.get("params"),
            n_samples=n_samples,
            max_traj_len=max_traj_len,
            seed=seed,
            delta=float(obj.get("delta", 0.2)),
            epsilons=eps_list,
            target=tgt,
            methods=methods,
            verify_probes=int(verify["n_probes"]) if verify else None,
            verify_seed=int(verify.get("seed", 0)) if verify else 0,
            snapshot_every=int(obj["snapshot_every"]) if obj.get("snapshot_every") else None,
            link_radius=float(obj["link_radius"]) if obj.get("link_radius") else None,
        )


def load_config(path) -> tuple[ExperimentConfig, dict]:
    path = Path(path)
    if not path.exists():
        raise _UsageError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise _UsageError(f"config {path} is not valid JSON: {exc}")
    return ExperimentConfig.from_json(raw), raw


def run_experiment(cfg: ExperimentConfig, raw_config: dict, output_dir, threads: int = 1) -> dict:
    """Full pipeline: sample, estimate, test, analyze, export.  Returns the manifest."""
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    counters: dict[str, object] = {"n_samples": cfg.n_samples}

    t0 = time.perf_counter()
    spec = systems.make_system(cfg.system_id, dt=cfg.dt, params=cfg.params)
    scfg = systems.SamplingConfig(cfg.n_samples, cfg.max_traj_len, cfg.seed)
    ds = systems.sample_dataset(spec, scfg)
    save_dataset(ds, outdir / "dataset.csv", systems.sampling_meta(spec, scfg))
    timings["sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    estimates = lipschitz.estimate_all(ds, cfg.delta, threads=threads)
    _write_lipschitz_csv(outdir / "lipschitz.csv", estimates)
    timings["estimate"] = time.perf_counter() - t0
    counters["lipschitz_fallbacks"] = sum(e.fallback_used for e in estimates)

    grid_target = isinstance(cfg.target, tuple) and cfg.target[0] == "grid"
    if isinstance(cfg.target, str):
        point_target = _parse_target(cfg.target, spec)
    elif grid_target:
        point_target = None
    else:
        point_target = cfg.target
    detail_eps = cfg.epsilons[-1]
    succ_index = neighbors.build(ds.x_next)
    method_sets: dict[str, frozenset] = {}

    for method in cfg.methods:
        mdir = outdir / method
        mdir.mkdir(exist_ok=True)
        t0 = time.perf_counter()
        if grid_target:
            _, nx, ny = cfg.target
            targets = analysis.make_grid(spec.state_bounds, (nx, ny))
            sweep = analysis.target_grid_sweep(
                ds, targets, detail_eps, method, estimates=estimates,
                delta=cfg.delta, link_radius=cfg.link_radius, threads=threads,
            )
            _write_heatmap_csv(mdir / "heatmap.csv", sweep)
            counters[f"{method}_grid_points"] = len(sweep.points)
        else:
            if method == "mecs":
                result = mecs.run_mecs(
                    ds, estimates, point_target, detail_eps, succ_index=succ_index
                )
                wall = time.perf_counter() - t0
                _write_balls_csv(mdir / "balls.csv", result)
                _write_controllable_csv(
                    mdir / "controllable.csv", result.controllable_indices, len(ds)
                )
                if cfg.snapshot_every:
                    _write_snapshots(mdir, result, cfg.snapshot_every)
                _write_json(
                    mdir / "run.meta.json",
                    {
                        "M": result.iterations,
                        "wall_time_s": wall,
                        "parameters": {
                            "epsilon": detail_eps,
                            "delta": cfg.delta,
                            "target": [float(v) for v in point_target],
                        },
                        "seed": cfg.seed,
                    },
                )
                counters["mecs_M"] = result.iterations
                ec = result.expansion_counts
                counters["mecs_max_expansion"] = int(max(ec)) if ec else 0
                counters["mecs_mean_expansion"] = float(np.mean(ec)) if ec else 0.0
                method_sets["mecs"] = result.controllable_indices
                if cfg.verify_probes:
                    tv = time.perf_counter()
                    records = analysis.verify_tree(
                        result, spec, ds, cfg.verify_probes, cfg.verify_seed
                    )
                    _write_verify_csv(mdir / "verify.csv", records)
                    timings["verify"] = time.perf_counter() - tv
                    counters["verify_pass_rate"] = (
                        sum(r.n_pass for r in records)
                        / sum(r.n_probes for r in records)
                    )
            else:
                graph = ferf.build_graph(
                    ds, point_target, detail_eps, link_radius=cfg.link_radius
                )
                hops = ferf.dijkstra_to_target(graph)
                cset = frozenset(
                    int(i) for i in np.flatnonzero(hops[graph.state_vids] != ferf.INF_HOPS)
                )
                _write_controllable_csv(mdir / "controllable.csv", cset, len(ds))
                _write_csv(
                    mdir / "distances.csv",
                    ["vertex", "hops_to_target"],
                    [[v, int(h) if h != ferf.INF_HOPS else -1] for v, h in enumerate(hops)],
                )
                counters["ferf_L"] = graph.n_vertices
                counters["ferf_edges"] = graph.n_edges
                method_sets["ferf"] = cset
            if len(cfg.epsilons) > 1:
                sweep = analysis.epsilon_sweep(
                    ds, point_target, cfg.epsilons, method, estimates=estimates,
                    delta=cfg.delta, link_radius=cfg.link_radius, threads=threads,
                )
                _write_sweep_csv(mdir / "sweep.csv", sweep)
        timings[method] = time.perf_counter() - t0

    if len(method_sets) == 2:
        a, b = method_sets["mecs"], method_sets["ferf"]
        _write_json(
            outdir / "compare.json",
            {
                "n_mecs": len(a),
                "n_ferf": len(b),
                "n_common": len(a & b),
                "n_symmetric_difference": len(a ^ b),
            },
        )

    manifest = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "config": raw_config,
        "seed": cfg.seed,
        "counters": counters,
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "files": [],
    }
    for p in sorted(outdir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            manifest["files"].append(
                {
                    "path": str(p.relative_to(outdir)),
                    "sha256": _sha256(p),
                    "bytes": p.stat().st_size,
                }
            )
    _write_json(outdir / "manifest.json", manifest)
    return manifest


def complexity_counters(manifest: dict) -> dict:
    """Scale indicators of a finished run: tree size M, expansion-set sizes,
    graph order L, and per-stage wall-clock seconds."""
    out = dict(manifest.get("counters", {}))
    out["timings_s"] = dict(manifest.get("timings_s", {}))
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sample(args) -> int:
    spec = systems.make_system(args.system, dt=args.dt)
    cfg = systems.SamplingConfig(args.n, args.max_traj_len, args.seed)
    ds = systems.sample_dataset(spec, cfg)
    out = Path(args.out or Path(args.output_dir) / "dataset.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out, systems.sampling_meta(spec, cfg))
    print(f"wrote {len(ds)} samples to {out}")
    return 0


def _cmd_estimate(args) -> int:
    ds, _, _ = _load_dataset_and_system(args.dataset)
    estimates = lipschitz.estimate_all(ds, args.delta, threads=args.threads)
    out = Path(args.out or Path(args.output_dir) / "lipschitz.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_lipschitz_csv(out, estimates)
    med = float(np.median([e.L_x_hat for e in estimates]))
    print(f"wrote {len(estimates)} estimates to {out} (median L_x_hat {med:.4f})")
    if args.dump_constraints is not None:
        i = args.dump_constraints
        index = neighbors.build(ds.xs)
        cons = lipschitz.build_constraints(ds, i, args.delta, index)
        cpath = out.parent / f"constraints_{i}.csv"
        _write_csv(cpath, ["a", "b", "c"], [[_fmt(p.a), _fmt(p.b), _fmt(p.c)] for p in cons])
        sol = lipschitz.solve_lcqp(cons) if cons else (0.0, 0.0)
        _write_json(
            out.parent / f"constraints_{i}.meta.json",
            {"sample_index": i, "delta": args.delta, "L_x_hat": sol[0], "L_u_hat": sol[1]},
        )
        print(f"dumped {len(cons)} constraints for sample {i} to {cpath}")
    return 0


def _cmd_mecs(args) -> int:
    ds, _, spec = _load_dataset_and_system(args.dataset)
    if args.lipschitz_file:
        estimates = _load_lipschitz_csv(Path(args.lipschitz_file), ds, args.delta)
    else:
        estimates = lipschitz.estimate_all(ds, args.delta, threads=args.threads)
    target = _parse_target(args.target, spec)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = mecs.run_mecs(ds, estimates, target, args.epsilon)
    wall = time.perf_counter() - t0
    _write_balls_csv(outdir / "balls.csv", result)
    _write_controllable_csv(outdir / "controllable.csv", result.controllable_indices, len(ds))
    if args.snapshot_every:
        _write_snapshots(outdir, result, args.snapshot_every)
    _write_json(
        outdir / "run.meta.json",
        {
            "M": result.iterations,
            "wall_time_s": wall,
            "parameters": {
                "epsilon": args.epsilon,
                "delta": args.delta,
                "target": [float(v) for v in target],
            },
            "seed": args.seed,
        },
    )
    d = analysis.doc(result.controllable_indices, ds)
    print(f"visited {result.iterations} balls; DOC {d:.4f}; wrote artifacts to {outdir}")
    return 0


def _cmd_ferf(args) -> int:
    ds, _, spec = _load_dataset_and_system(args.dataset)
    target = _parse_target(args.target, spec)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    graph = ferf.build_graph(ds, target, args.epsilon, link_radius=args.link_radius)
    if args.mode == "floyd" and graph.n_vertices > _FLOYD_WARN_VERTICES:
        print(
            f"warning: {graph.n_vertices} vertices; the all-pairs matrix is large, "
            f"consider --mode dijkstra",
            file=sys.stderr,
        )
    if args.mode == "floyd":
        hops = ferf.floyd_all_pairs(graph).hops[:, graph.target_vid]
    else:
        hops = ferf.dijkstra_to_target(graph)
    cset = frozenset(int(i) for i in np.flatnonzero(hops[graph.state_vids] != ferf.INF_HOPS))
    _write_controllable_csv(outdir / "controllable.csv", cset, len(ds))
    _write_csv(
        outdir / "distances.csv",
        ["vertex", "hops_to_target"],
        [[v, int(h) if h != ferf.INF_HOPS else -1] for v, h in enumerate(hops)],
    )
    print(
        f"graph with {graph.n_vertices} vertices / {graph.n_edges} edges; "
        f"DOC {analysis.doc(cset, ds):.4f}; wrote artifacts to {outdir}"
    )
    return 0


def _parse_epsilons(text: str) -> list[float]:
    try:
        eps = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"cannot parse epsilon list {text!r}")
    if not eps:
        raise _UsageError("empty epsilon list")
    return eps


def _cmd_doc_sweep(args) -> int:
    ds, _, spec = _load_dataset_and_system(args.dataset)
    target = _parse_target(args.target, spec)
    eps = _parse_epsilons(args.epsilons)
    methods = ["mecs", "ferf"] if args.method == "both" else [args.method]
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    estimates = None
    for method in methods:
        if method == "mecs" and estimates is None:
            if args.lipschitz_file:
                estimates = _load_lipschitz_csv(Path(args.lipschitz_file), ds, args.delta)
            else:
                estimates = lipschitz.estimate_all(ds, args.delta, threads=args.threads)
        sweep = analysis.epsilon_sweep(
            ds, target, eps, method, estimates=estimates, delta=args.delta,
            threads=args.threads,
        )
        name = "sweep.csv" if len(methods) == 1 else f"sweep_{method}.csv"
        _write_sweep_csv(outdir / name, sweep)
        print(f"{method}: " + ", ".join(f"{e:g}->{r.doc:.3f}" for e, r in sweep.points))
    return 0


def _cmd_doc_map(args) -> int:
    ds, _, spec = _load_dataset_and_system(args.dataset)
    if spec is None:
        raise DataError("doc-map needs dataset metadata with state bounds")
    try:
        nx, ny = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        raise _UsageError(f"cannot parse grid {args.grid!r}, expected e.g. 21x21")
    targets = analysis.make_grid(spec.state_bounds, (nx, ny))
    estimates = None
    if args.method == "mecs":
        if args.lipschitz_file:
            estimates = _load_lipschitz_csv(Path(args.lipschitz_file), ds, args.delta)
        else:
            estimates = lipschitz.estimate_all(ds, args.delta, threads=args.threads)
    sweep = analysis.target_grid_sweep(
        ds, targets, args.epsilon, args.method, estimates=estimates, delta=args.delta,
        threads=args.threads,
    )
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_heatmap_csv(outdir / "heatmap.csv", sweep)
    print(f"wrote {len(sweep.points)} grid points to {outdir / 'heatmap.csv'}")
    return 0


def _cmd_verify(args) -> int:
    ds, _, spec = _load_dataset_and_system(args.dataset)
    if spec is None:
        raise DataError("verify needs dataset metadata naming the generating system")
    rundir = Path(args.run_dir)
    meta_file = rundir / "run.meta.json"
    if not meta_file.exists():
        raise DataError(f"run metadata not found: {meta_file}")
    with open(meta_file) as fh:
        run_meta = json.load(fh)
    params = run_meta["parameters"]
    result = _rebuild_result(
        rundir / "balls.csv", ds, np.array(params["target"]), params["epsilon"]
    )
    records = analysis.verify_tree(result, spec, ds, args.probes, args.seed)
    _write_verify_csv(rundir / "verify.csv", records)
    total = sum(r.n_probes for r in records)
    passed = sum(r.n_pass for r in records)
    print(f"{passed}/{total} probes reached the target ball")
    return 0


def _cmd_run(args) -> int:
    config_path = args.config or args.global_config
    if not config_path:
        raise _UsageError("run requires --config")
    cfg, raw = load_config(config_path)
    if args.seed is not None:
        cfg.seed = args.seed
    outdir = args.output_dir if args.output_dir != "." else raw.get("output_dir", "run_output")
    manifest = run_experiment(cfg, raw, outdir, threads=args.threads)
    print(json.dumps(complexity_counters(manifest), indent=2, sort_keys=True))
    print(f"wrote {len(manifest['files'])} files to {outdir}")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="datactrl", description=__doc__)
    p.add_argument("--config", dest="global_config", default=None,
                   help="experiment config (for the run subcommand)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output-dir", default=".")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("sample", help="sample a transition dataset from a benchmark system")
    q.add_argument("--system", required=True, choices=systems.SYSTEM_IDS)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--max-traj-len", type=int, default=50)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--dt", type=float, default=None)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_sample)

    q = sub.add_parser("estimate-lipschitz", help="per-sample local Lipschitz estimates")
    q.add_argument("--dataset", required=True)
    q.add_argument("--delta", type=float, default=0.2)
    q.add_argument("--out", default=None)
    q.add_argument("--dump-constraints", type=int, default=None, metavar="INDEX",
                   help="also dump the constraint set and solution of one sample")
    q.set_defaults(func=_cmd_estimate)

    q = sub.add_parser("mecs", help="controllable-tree search from a target ball")
    q.add_argument("--dataset", required=True)
    q.add_argument("--target", required=True, help="'x0,x1' or a named equilibrium like equ1")
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--delta", type=float, default=0.2)
    q.add_argument("--lipschitz-file", default=None)
    q.add_argument("--snapshot-every", type=int, default=None)
    q.set_defaults(func=_cmd_mecs)

    q = sub.add_parser("ferf", help="reachability-graph controllability test")
    q.add_argument("--dataset", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--mode", choices=("floyd", "dijkstra"), default="dijkstra")
    q.add_argument("--link-radius", type=float, default=None)
    q.set_defaults(func=_cmd_ferf)

    q = sub.add_parser("doc-sweep", help="DOC across tolerances at a fixed target")
    q.add_argument("--dataset", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--epsilons", required=True, help="comma-separated ascending values")
    q.add_argument("--method", choices=("mecs", "ferf", "both"), default="both")
    q.add_argument("--delta", type=float, default=0.2)
    q.add_argument("--lipschitz-file", default=None)
    q.set_defaults(func=_cmd_doc_sweep)

    q = sub.add_parser("doc-map", help="DOC heatmap over a grid of targets")
    q.add_argument("--dataset", required=True)
    q.add_argument("--grid", default="21x21")
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--method", choices=("mecs", "ferf"), default="ferf")
    q.add_argument("--delta", type=float, default=0.2)
    q.add_argument("--lipschitz-file", default=None)
    q.set_defaults(func=_cmd_doc_map)

    q = sub.add_parser("verify", help="rollout-check the balls of a finished search")
    q.add_argument("--dataset", required=True)
    q.add_argument("--run-dir", required=True)
    q.add_argument("--probes", type=int, default=10)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=_cmd_verify)

    q = sub.add_parser("run", help="full experiment pipeline from a JSON config")
    q.add_argument("--config", default=None)
    q.set_defaults(func=_cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolationError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except DatactrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
