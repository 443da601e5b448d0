"""Job schema and the six plot kinds.

Renders are pure functions of the input files and style options: fixed
figure geometry, no timestamps, and a headless backend, so re-rendering
the same job over the same artifacts reproduces the same image.
"""

import dataclasses
import json
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import EllipseCollection

from .artifacts import (
    SchemaError,
    read_balls,
    read_constraints,
    read_constraints_meta,
    read_dataset,
    read_heatmap,
    read_sweep,
)

KINDS = ("quiver", "balls", "snapshots", "doc_curve", "doc_heatmap", "lcqp_geometry")

_BALL_COLOR = "tab:blue"
_DATA_COLOR = "0.55"


@dataclass(frozen=True)
class PlotStyle:
    bounds: tuple | None = None  # (xmin, xmax, ymin, ymax)
    cmap: str = "viridis"
    ball_alpha: float = 0.35
    dpi: int = 150
    title: str | None = None


_STYLE_KEYS = {f.name for f in dataclasses.fields(PlotStyle)}


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple
    output: Path
    style: PlotStyle = PlotStyle()


def _style_from(obj):
    if not isinstance(obj, dict):
        raise SchemaError("style must be a JSON object")
    unknown = sorted(set(obj) - _STYLE_KEYS)
    if unknown:
        raise SchemaError(f"unknown style keys: {unknown}")
    if obj.get("bounds") is not None:
        b = obj["bounds"]
        if not isinstance(b, (list, tuple)) or len(b) != 4:
            raise SchemaError("style.bounds must be [xmin, xmax, ymin, ymax]")
        obj = {**obj, "bounds": tuple(float(v) for v in b)}
    return PlotStyle(**obj)


def load_job(path) -> PlotJob:
    """Parse a job JSON file; relative input/output paths resolve against it."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"job file not found: {path}")
    with open(path) as fh:
        raw = json.load(fh)
    unknown = sorted(set(raw) - {"kind", "inputs", "output", "style"})
    if unknown:
        raise SchemaError(f"{path}: unknown job keys: {unknown}")
    for key in ("kind", "inputs", "output"):
        if key not in raw:
            raise SchemaError(f"{path}: missing job key {key!r}")
    if not isinstance(raw["inputs"], list) or not raw["inputs"]:
        raise SchemaError(f"{path}: inputs must be a non-empty list of paths")
    base = path.parent
    return PlotJob(
        kind=str(raw["kind"]),
        inputs=tuple(base / p for p in raw["inputs"]),
        output=base / raw["output"],
        style=_style_from(raw.get("style", {})),
    )


# ---------------------------------------------------------------------------
# shared drawing helpers


def _apply_frame(ax, style, title_default):
    if style.bounds is not None:
        ax.set_xlim(style.bounds[0], style.bounds[1])
        ax.set_ylim(style.bounds[2], style.bounds[3])
    ax.set_aspect("equal")
    ax.set_xlabel("x0")
    ax.set_ylabel("x1")
    ax.set_title(style.title if style.title is not None else title_default)


def _draw_balls(ax, centers, radii, alpha):
    if centers.shape[0] == 0:
        return
    if centers.shape[1] != 2:
        raise SchemaError(f"ball plots need 2-D centers, got {centers.shape[1]}-D")
    coll = EllipseCollection(
        widths=2.0 * radii,
        heights=2.0 * radii,
        angles=0.0,
        units="xy",
        offsets=centers,
        offset_transform=ax.transData,
        facecolor=_BALL_COLOR,
        edgecolor="none",
        alpha=alpha,
    )
    ax.add_collection(coll)
    pad = radii.max() if radii.size else 0.0
    ax.update_datalim(np.concatenate([centers - pad, centers + pad]))
    ax.autoscale_view()


def _snapshot_label(path):
    m = re.search(r"(\d+)$", Path(path).stem)
    return f"step {int(m.group(1))}" if m else Path(path).stem


# ---------------------------------------------------------------------------
# the six kinds


def _render_quiver(job):
    (src,) = job.inputs
    xs, _, xn = read_dataset(src)
    if xs.shape[1] != 2:
        raise SchemaError(f"{src}: quiver plots need 2-D states, got {xs.shape[1]}-D")
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    delta = xn - xs
    ax.quiver(
        xs[:, 0], xs[:, 1], delta[:, 0], delta[:, 1],
        angles="xy", scale_units="xy", scale=1.0,
        width=0.0022, color=_DATA_COLOR, alpha=0.8,
    )
    _apply_frame(ax, job.style, f"sampled transitions (N={xs.shape[0]})")
    return fig


def _render_balls(job):
    if len(job.inputs) not in (1, 2):
        raise SchemaError("balls jobs take balls.csv plus an optional dataset.csv")
    centers, radii = read_balls(job.inputs[0])
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    if len(job.inputs) == 2:
        xs, _, _ = read_dataset(job.inputs[1])
        ax.plot(xs[:, 0], xs[:, 1], ".", ms=2.0, color=_DATA_COLOR, zorder=1)
    _draw_balls(ax, centers, radii, job.style.ball_alpha)
    _apply_frame(ax, job.style, f"controllable ball union (M={centers.shape[0]})")
    return fig


def _render_snapshots(job):
    panels = [(read_balls(p), _snapshot_label(p)) for p in job.inputs]
    n = len(panels)
    ncols = min(2, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.6 * ncols, 4.2 * nrows), squeeze=False,
        sharex=True, sharey=True,
    )
    for ax, ((centers, radii), label) in zip(axes.flat, panels):
        _draw_balls(ax, centers, radii, job.style.ball_alpha)
        if job.style.bounds is not None:
            ax.set_xlim(job.style.bounds[0], job.style.bounds[1])
            ax.set_ylim(job.style.bounds[2], job.style.bounds[3])
        ax.set_aspect("equal")
        ax.set_title(label)
    for ax in axes.flat[n:]:
        ax.axis("off")
    if job.style.title is not None:
        fig.suptitle(job.style.title)
    return fig


def _render_doc_curve(job):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for src in job.inputs:
        param, doc = read_sweep(src)
        label = Path(src).parent.name or Path(src).stem
        ax.plot(param, doc, "o-", label=label)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("DOC")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    ax.legend()
    if job.style.bounds is not None:
        ax.set_xlim(job.style.bounds[0], job.style.bounds[1])
        ax.set_ylim(job.style.bounds[2], job.style.bounds[3])
    ax.set_title(job.style.title if job.style.title is not None else "degree of controllability")
    return fig


def _render_doc_heatmap(job):
    (src,) = job.inputs
    tx0, tx1, doc = read_heatmap(src)
    ux0, ux1 = np.unique(tx0), np.unique(tx1)
    if doc.size != ux0.size * ux1.size:
        raise SchemaError(
            f"{src}: {doc.size} rows do not fill a {ux0.size}x{ux1.size} target grid"
        )
    order = np.lexsort((tx1, tx0))
    grid = doc[order].reshape(ux0.size, ux1.size)
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    mesh = ax.pcolormesh(
        ux0, ux1, grid.T, cmap=job.style.cmap, vmin=0.0, vmax=1.0, shading="nearest"
    )
    fig.colorbar(mesh, ax=ax, label="DOC")
    _apply_frame(ax, job.style, "DOC by target state")
    ax.set_xlabel("target x0")
    ax.set_ylabel("target x1")
    return fig


def _render_lcqp_geometry(job):
    (src,) = job.inputs
    a, b, c = read_constraints(src)
    meta = read_constraints_meta(Path(src).with_name(Path(src).stem + ".meta.json"))
    spans = [1.0]
    spans += [ci / ai for ai, ci in zip(a, c) if ai > 0.0]
    spans += [ci / bi for bi, ci in zip(b, c) if bi > 0.0]
    if meta is not None:
        spans += [1.3 * float(meta["L_x_hat"]), 1.3 * float(meta["L_u_hat"])]
    lim = 1.15 * max(spans)
    fig, ax = plt.subplots(figsize=(5.6, 5.6))
    grid = np.linspace(0.0, lim, 400)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    feas = np.ones(X.shape, dtype=bool)
    for ai, bi, ci in zip(a, b, c):
        feas &= ai * X + bi * Y >= ci
    ax.contourf(X, Y, feas.astype(float), levels=[0.5, 1.5], colors=["tab:green"], alpha=0.12)
    for ai, bi, ci in zip(a, b, c):
        if bi > 0.0:
            y = (ci - ai * grid) / bi
            keep = (y >= 0.0) & (y <= lim)
            ax.plot(grid[keep], y[keep], color=_BALL_COLOR, lw=0.9, alpha=0.7)
        elif ai > 0.0:
            ax.axvline(ci / ai, color=_BALL_COLOR, lw=0.9, alpha=0.7)
    if meta is not None:
        lx, lu = float(meta["L_x_hat"]), float(meta["L_u_hat"])
        level = np.hypot(lx, lu)
        theta = np.linspace(0.0, np.pi / 2, 200)
        ax.plot(level * np.cos(theta), level * np.sin(theta), "--", color="tab:orange",
                label="objective level set")
        ax.plot([lx], [lu], "o", color="tab:red", label=f"optimum ({lx:.3f}, {lu:.3f})")
        ax.legend(loc="upper right")
    ax.set_xlim(0.0, lim)
    ax.set_ylim(0.0, lim)
    ax.set_xlabel("L_x")
    ax.set_ylabel("L_u")
    ax.set_title(job.style.title if job.style.title is not None else
                 f"growth-rate constraints (K={a.size})")
    return fig


_RENDERERS = {
    "quiver": _render_quiver,
    "balls": _render_balls,
    "snapshots": _render_snapshots,
    "doc_curve": _render_doc_curve,
    "doc_heatmap": _render_doc_heatmap,
    "lcqp_geometry": _render_lcqp_geometry,
}

_SINGLE_INPUT = {"quiver", "doc_heatmap", "lcqp_geometry"}


def render(job: PlotJob) -> Path:
    """Render one job to its output image and return the output path."""
    if job.kind not in KINDS:
        raise SchemaError(f"unknown plot kind {job.kind!r} (expected one of {KINDS})")
    if not job.inputs:
        raise SchemaError("job has no inputs")
    if job.kind in _SINGLE_INPUT and len(job.inputs) != 1:
        raise SchemaError(f"{job.kind} jobs take exactly one input file")
    for p in job.inputs:
        if not Path(p).exists():
            raise SchemaError(f"input file not found: {p}")
    fig = _RENDERERS[job.kind](job)
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=job.style.dpi)
    finally:
        plt.close(fig)
    return out
