import csv
import json

import numpy as np
import pytest

from plotkit import PlotJob, PlotStyle, SchemaError, load_job, render
from plotkit.render import _snapshot_label


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _dataset_csv(path, n=12, seed=0):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-1, 1, (n, 2))
    rows = [list(x) + [0.1] + list(0.9 * x) for x in xs]
    _write_csv(path, ["x0", "x1", "u0", "xn0", "xn1"], rows)
    return path


def _balls_csv(path, n=8, seed=1):
    rng = np.random.default_rng(seed)
    rows = [
        [i, i - 1, i, i, round(float(rng.uniform(0.02, 0.1)), 4)]
        + list(np.round(rng.uniform(-1, 1, 2), 4))
        for i in range(n)
    ]
    _write_csv(path, ["node_id", "parent_id", "via_sample", "iteration", "radius", "c0", "c1"], rows)
    return path


def _sweep_csv(path):
    _write_csv(path, ["param", "doc", "n_controllable", "n_total"],
               [[0.02, 0.4, 40, 100], [0.05, 0.9, 90, 100], [0.08, 1.0, 100, 100]])
    return path


def _heatmap_csv(path):
    rows = [[a, b, (a + b + 2) / 4] for a in (-1.0, 0.0, 1.0) for b in (-1.0, 1.0)]
    _write_csv(path, ["tx0", "tx1", "doc"], rows)
    return path


def _constraints_csv(path, with_meta=True):
    _write_csv(path, ["a", "b", "c"], [[0.5, 0.1, 0.6], [0.2, 0.4, 0.5], [0.9, 0.0, 0.3]])
    if with_meta:
        meta = path.with_name(path.stem + ".meta.json")
        meta.write_text(json.dumps({"sample_index": 3, "delta": 0.2,
                                    "L_x_hat": 1.05, "L_u_hat": 0.31}))
    return path


def test_render_every_kind(tmp_path):
    jobs = [
        PlotJob("quiver", (_dataset_csv(tmp_path / "dataset.csv"),), tmp_path / "f1.png"),
        PlotJob("balls", (_balls_csv(tmp_path / "balls.csv"),), tmp_path / "f2.png"),
        PlotJob(
            "snapshots",
            (_balls_csv(tmp_path / "snapshot_000020.csv", n=3),
             _balls_csv(tmp_path / "snapshot_000040.csv", n=6, seed=2)),
            tmp_path / "f3.png",
        ),
        PlotJob("doc_curve", (_sweep_csv(tmp_path / "sweep.csv"),), tmp_path / "f4.png"),
        PlotJob("doc_heatmap", (_heatmap_csv(tmp_path / "heatmap.csv"),), tmp_path / "f5.png"),
        PlotJob("lcqp_geometry", (_constraints_csv(tmp_path / "constraints_3.csv"),),
                tmp_path / "f6.png"),
    ]
    for job in jobs:
        out = render(job)
        assert out.exists() and out.stat().st_size > 0, job.kind


def test_render_is_deterministic(tmp_path):
    src = _balls_csv(tmp_path / "balls.csv")
    a = render(PlotJob("balls", (src,), tmp_path / "a.png"))
    b = render(PlotJob("balls", (src,), tmp_path / "b.png"))
    assert a.read_bytes() == b.read_bytes()


def test_empty_balls_file_renders_axes(tmp_path):
    p = tmp_path / "balls.csv"
    _write_csv(p, ["node_id", "parent_id", "via_sample", "iteration", "radius", "c0", "c1"], [])
    out = render(PlotJob("balls", (p,), tmp_path / "empty.png",
                         PlotStyle(bounds=(-1, 1, -1, 1))))
    assert out.stat().st_size > 0


def test_balls_with_dataset_background(tmp_path):
    out = render(PlotJob(
        "balls",
        (_balls_csv(tmp_path / "balls.csv"), _dataset_csv(tmp_path / "dataset.csv")),
        tmp_path / "bg.png",
    ))
    assert out.stat().st_size > 0


def test_lcqp_geometry_without_meta(tmp_path):
    src = _constraints_csv(tmp_path / "constraints_9.csv", with_meta=False)
    out = render(PlotJob("lcqp_geometry", (src,), tmp_path / "geom.png"))
    assert out.stat().st_size > 0


def test_heatmap_rejects_partial_grid(tmp_path):
    p = tmp_path / "heatmap.csv"
    rows = [[a, b, 0.5] for a in (-1.0, 0.0, 1.0) for b in (-1.0, 1.0)][:-1]
    _write_csv(p, ["tx0", "tx1", "doc"], rows)
    with pytest.raises(SchemaError, match="grid"):
        render(PlotJob("doc_heatmap", (p,), tmp_path / "h.png"))


def test_render_validates_kind_and_inputs(tmp_path):
    src = _sweep_csv(tmp_path / "sweep.csv")
    with pytest.raises(SchemaError, match="kind"):
        render(PlotJob("pie", (src,), tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="not found"):
        render(PlotJob("doc_curve", (tmp_path / "missing.csv",), tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="exactly one"):
        render(PlotJob("doc_heatmap", (src, src), tmp_path / "x.png"))


def test_schema_mismatch_against_kind(tmp_path):
    # a sweep file fed to a balls job must name the column that broke
    src = _sweep_csv(tmp_path / "sweep.csv")
    with pytest.raises(SchemaError, match="node_id"):
        render(PlotJob("balls", (src,), tmp_path / "x.png"))


def test_load_job_roundtrip_and_relative_paths(tmp_path):
    _sweep_csv(tmp_path / "sweep.csv")
    job_file = tmp_path / "job.json"
    job_file.write_text(json.dumps({
        "kind": "doc_curve",
        "inputs": ["sweep.csv"],
        "output": "figs/curve.png",
        "style": {"title": "equilibrium target", "dpi": 100},
    }))
    job = load_job(job_file)
    assert job.style.title == "equilibrium target"
    out = render(job)
    assert out == tmp_path / "figs/curve.png" and out.stat().st_size > 0


def test_load_job_rejects_unknown_keys(tmp_path):
    job_file = tmp_path / "job.json"
    job_file.write_text(json.dumps({"kind": "balls", "inputs": ["b.csv"],
                                    "output": "o.png", "extra": 1}))
    with pytest.raises(SchemaError, match="extra"):
        load_job(job_file)
    job_file.write_text(json.dumps({"kind": "balls", "inputs": [],
                                    "output": "o.png"}))
    with pytest.raises(SchemaError, match="inputs"):
        load_job(job_file)
    job_file.write_text(json.dumps({"kind": "balls", "inputs": ["b.csv"],
                                    "output": "o.png", "style": {"glitter": True}}))
    with pytest.raises(SchemaError, match="glitter"):
        load_job(job_file)
    job_file.write_text(json.dumps({"kind": "balls", "inputs": ["b.csv"],
                                    "output": "o.png", "style": {"bounds": [0, 1]}}))
    with pytest.raises(SchemaError, match="bounds"):
        load_job(job_file)


def test_snapshot_labels():
    assert _snapshot_label("runs/eq/mecs/snapshot_000040.csv") == "step 40"
    assert _snapshot_label("odd_name.csv") == "odd_name"
