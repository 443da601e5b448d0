"""Command line entry points: render one job, or the standard set for a run."""

import argparse
import fnmatch
import sys
from pathlib import Path

from .artifacts import PlotkitError, SchemaError, read_manifest
from .render import KINDS, PlotJob, PlotStyle, load_job, render


def _match(rels, pattern):
    return sorted(r for r in rels if fnmatch.fnmatch(r, pattern))


def standard_jobs(rundir: Path, rels, outdir: Path) -> list[PlotJob]:
    """The default figure set for a finished run, from whatever it produced."""
    style = PlotStyle()
    jobs = []
    dataset = rundir / "dataset.csv" if "dataset.csv" in rels else None
    if dataset is not None:
        jobs.append(PlotJob("quiver", (dataset,), outdir / "quiver.png", style))
    if "mecs/balls.csv" in rels:
        inputs = (rundir / "mecs/balls.csv",) + ((dataset,) if dataset is not None else ())
        jobs.append(PlotJob("balls", inputs, outdir / "balls.png", style))
    snaps = _match(rels, "mecs/snapshot_*.csv")
    if snaps:
        jobs.append(
            PlotJob("snapshots", tuple(rundir / s for s in snaps), outdir / "snapshots.png", style)
        )
    sweeps = _match(rels, "*/sweep.csv")
    if sweeps:
        jobs.append(
            PlotJob("doc_curve", tuple(rundir / s for s in sweeps), outdir / "doc_curve.png", style)
        )
    if "ferf/heatmap.csv" in rels:
        jobs.append(
            PlotJob("doc_heatmap", (rundir / "ferf/heatmap.csv",), outdir / "doc_heatmap.png", style)
        )
    for rel in _match(rels, "constraints_*.csv"):
        stem = Path(rel).stem
        jobs.append(
            PlotJob("lcqp_geometry", (rundir / rel,), outdir / f"lcqp_{stem.split('_')[-1]}.png", style)
        )
    return jobs


def _cmd_render(args) -> int:
    job = load_job(args.job)
    out = render(job)
    print(f"rendered {job.kind} -> {out}")
    return 0


def _cmd_all(args) -> int:
    rundir, rels = read_manifest(args.run_manifest)
    outdir = Path(args.output_dir) if args.output_dir else rundir / "figs"
    jobs = standard_jobs(rundir, rels, outdir)
    if not jobs:
        raise SchemaError(f"{args.run_manifest}: no renderable artifacts in manifest")
    for job in jobs:
        out = render(job)
        print(f"rendered {job.kind} -> {out}")
    print(f"rendered {len(jobs)} figures to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description=f"Render run artifacts into figures (kinds: {', '.join(KINDS)}).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a single job described by a JSON file")
    p.add_argument("--job", required=True, help="path to the job JSON")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("all", help="render the standard figure set for a finished run")
    p.add_argument("--run-manifest", required=True, help="path to the run's manifest.json")
    p.add_argument("--output-dir", default=None, help="figure directory (default: <run>/figs)")
    p.set_defaults(func=_cmd_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except PlotkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
