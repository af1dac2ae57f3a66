"""Command line front end: one subcommand per pipeline, seeded and replayable.

Every invocation writes its outputs plus a manifest (argv, input digests,
tool version, wall clock); re-running the recorded argv reproduces the
outputs byte for byte.  Errors are reported as single-line JSON on stderr
with exit code 1; usage problems exit with code 2.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, depths, neuro, plots, simgen
from .errors import CurveDepthError
from .fdata import SubsampleSpec, read_curveset_csv
from .metrics import MetricDescriptor
from .symmetry import center_to_dict, random_center, solve_center

SUBCOMMANDS = ("center", "depth", "sim-convergence", "sim-identify", "mask",
               "deconvolve", "corr-vt", "testretest", "representative", "synth")

_DEPTH_METHODS = ("random", "simple", "metric", "idt", "ids", "band", "mbd", "rtukey")


def _float_str(v) -> str:
    return repr(float(v))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class _Run:
    """Collects inputs/outputs of one invocation and writes the manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.t0 = time.monotonic()
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def input_path(self, p) -> Path:
        p = Path(p)
        self.inputs.append(p)
        return p

    def out(self, default_name: str) -> Path:
        """Output path for one artifact of this run.

        With --out BASE, sibling artifacts share BASE's stem and differ in the
        extension chain taken from the default name (first dot onward);
        otherwise the default name lands in --out-dir.
        """
        base = Path(self.args.out) if getattr(self.args, "out", None) else None
        if base is not None:
            base = base if base.is_absolute() else self.out_dir / base
            ext = default_name.split(".", 1)[1]
            path = base.parent / (base.name[: -len(base.suffix)] if base.suffix else base.name)
            path = path.parent / (path.name + "." + ext)
        else:
            path = self.out_dir / default_name
        if path not in self.outputs:
            self.outputs.append(path)
        return path

    def finish(self) -> None:
        primary = self.outputs[0] if self.outputs else self.out_dir / "run"
        manifest = {
            "tool": "curvedepth",
            "version": __version__,
            "subcommand": self.argv[0] if self.argv else "",
            "argv": self.argv,
            "seed": getattr(self.args, "seed", None),
            "threads": self.args.threads,
            "inputs": {str(p): _sha256(p) for p in self.inputs},
            "outputs": [str(p) for p in self.outputs],
            "wall_clock_s": round(time.monotonic() - self.t0, 3),
        }
        path = primary.with_suffix(".manifest.json")
        path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


def _write_rows(run: _Run, rows: list[dict], columns, name_csv: str) -> Path:
    """Report rows as CSV (or JSON under --format json)."""
    if run.args.format == "json":
        path = run.out(name_csv.rsplit(".", 1)[0] + ".json")
        path.write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")
        return path
    path = run.out(name_csv)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            out = {}
            for key in columns:
                v = row.get(key, "")
                out[key] = _float_str(v) if isinstance(v, float) else ("" if v is None else v)
            writer.writerow(out)
    return path


def _metric(args) -> MetricDescriptor:
    return MetricDescriptor(args.metric)


def _map_fn(run: _Run, stack) -> callable:
    threads = run.args.threads or os.cpu_count() or 1
    if threads <= 1:
        return map
    ex = stack.enter_context(ThreadPoolExecutor(max_workers=threads))
    return ex.map


# ---------------------------------------------------------------- handlers

def _cmd_center(run: _Run) -> None:
    args = run.args
    cs = read_curveset_csv(run.input_path(args.input))
    sol = random_center(cs, _metric(args), SubsampleSpec(args.n, args.m, args.seed),
                        full_candidates=args.full_candidates)
    path = run.out("center.json")
    path.write_text(json.dumps(center_to_dict(sol), indent=1) + "\n", encoding="utf-8")


def _cmd_depth(run: _Run) -> None:
    args = run.args
    cs = read_curveset_csv(run.input_path(args.input))
    metric = _metric(args)
    method = args.method
    if method in ("random", "simple"):
        sol = random_center(cs, metric, SubsampleSpec(args.n, args.m, args.seed))
        if method == "random":
            result = depths.random_depth(cs, metric, depths.DepthParams(center=sol))
        else:
            result = depths.simple_random_depth(cs, metric, sol)
    elif method == "metric":
        idx = np.arange(cs.n_curves, dtype=np.intp)
        sol = solve_center(cs, metric, idx, idx, idx, seed=args.seed)
        partner, _ = depths.resolve_reference_pair(cs, metric, sol)
        if partner is None:
            result = depths.random_depth(cs, metric, depths.DepthParams(center=sol))
        else:
            result = depths.metric_depth(cs, metric, sol.center_indices,
                                         (partner, sol.selected))
    elif method == "idt":
        result = depths.integrated_depth(cs, "tukey")
    elif method == "ids":
        result = depths.integrated_depth(cs, "simplicial")
    elif method == "band":
        result = depths.band_depth_j2(cs)
    elif method == "mbd":
        result = depths.modified_band_depth_j2(cs)
    else:
        spec = depths.ProjectionSpec(k=args.projections, seed=args.seed)
        result = depths.random_tukey_depth(cs, spec)
    csv_path = run.out("depth.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,depth\n")
        for i, v in enumerate(result.values):
            fh.write(f"{i},{_float_str(v)}\n")
    sidecar = {
        "deepest_index": result.deepest_index,
        "method": result.method,
        "parameters": {"metric": args.metric, "n": args.n, "m": args.m,
                       "seed": args.seed, "projections": args.projections,
                       **{k: v for k, v in result.params.items() if not isinstance(v, np.ndarray)}},
    }
    run.out("depth.json").write_text(json.dumps(sidecar, indent=1, default=str) + "\n",
                                     encoding="utf-8")


def _cmd_sim_convergence(run: _Run) -> None:
    import contextlib

    args = run.args
    cfg = simgen.SimConfig(N=args.N, c=args.c, sd=args.sd, seed=args.seed)
    with contextlib.ExitStack() as stack:
        report = simgen.convergence_experiment(
            cfg, args.n, args.m, args.reps, args.seed, map_fn=_map_fn(run, stack))
    rows = report.to_records()
    _write_rows(run, rows, simgen.ExperimentReport.COLUMNS, "report.csv")
    if not args.no_plot:
        plots.convergence_figure(rows, run.out("report.png"))


def _cmd_sim_identify(run: _Run) -> None:
    import contextlib

    args = run.args
    cfgs = [simgen.SimConfig(N=n, c=args.c, sd=sd) for n in args.N for sd in args.sd]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    with contextlib.ExitStack() as stack:
        report = simgen.identification_experiment(
            cfgs, methods, args.reps, args.seed, map_fn=_map_fn(run, stack))
    rows = report.to_records()
    _write_rows(run, rows, simgen.ExperimentReport.COLUMNS, "report.csv")
    if not args.no_plot:
        plots.identification_figure(rows, run.out("report.png"))


def _cmd_mask(run: _Run) -> None:
    args = run.args
    f = neuro.read_field4d(run.input_path(args.input))
    mask = neuro.mask_threshold(f, args.threshold)
    neuro.write_mask(mask, run.out("mask.fdmk"))
    stats = {"threshold": args.threshold, "flagged": int(mask.flags.sum()),
             "total": int(np.prod(mask.dims))}
    run.out("mask.json").write_text(json.dumps(stats, indent=1) + "\n", encoding="utf-8")


def _cmd_deconvolve(run: _Run) -> None:
    args = run.args
    f = neuro.read_field4d(run.input_path(args.input))
    if args.mask:
        mask = neuro.read_mask(run.input_path(args.mask))
    else:
        mask = neuro.mask_threshold(f, args.threshold)
    img = neuro.depth_image(f, mask, _metric(args),
                            SubsampleSpec(args.n, args.m, args.seed))
    csv_path = run.out("deconvolved.csv")
    run.out("deconvolved.json")  # sidecar written by the encoder below
    neuro.write_depth_image_csv(img, csv_path)
    if not args.no_plot:
        plots.depth_slices_figure(img.values, run.out("deconvolved.png"))


def _cmd_corr_vt(run: _Run) -> None:
    args = run.args
    img = neuro.read_depth_image_csv(run.input_path(args.image))
    run.input_path(Path(args.image).with_suffix(".json"))
    vt = neuro.read_vtmap_csv(run.input_path(args.vt))
    rows = []
    for p in args.p:
        value = neuro.topp_correlation(img, vt, p, method=args.corr)
        rows.append({"p": float(p), "correlation": value, "method": args.corr})
    _write_rows(run, rows, ("p", "correlation", "method"), "corr_vt.csv")
    if not args.no_plot:
        plots.percent_curve_figure(rows, "correlation", "|correlation|",
                                   run.out("corr_vt.png"))


def _cmd_testretest(run: _Run) -> None:
    args = run.args
    images = []
    for spec in args.image:
        subject, scan, path = spec.split(":", 2)
        img = neuro.read_depth_image_csv(run.input_path(path))
        run.input_path(Path(path).with_suffix(".json"))
        images.append((subject, scan, img))
    p_grid = [float(p) for p in args.p]
    report = neuro.test_retest(images, p_grid, method=args.corr)
    rows = report.to_records()
    _write_rows(run, rows, neuro.TestRetestReport.COLUMNS, "testretest.csv")
    if not args.no_plot:
        plots.percent_curve_figure(rows, "f", "f(p)", run.out("testretest.png"))


def _cmd_representative(run: _Run) -> None:
    args = run.args
    fields, masks = [], []
    for path in args.inputs:
        f = neuro.read_field4d(run.input_path(path), subject_id=Path(path).stem)
        fields.append(f)
        masks.append(neuro.mask_threshold(f, args.threshold))
    result = neuro.representative_subject(fields, masks)
    ranks = np.empty(len(fields), dtype=int)
    ranks[result.order] = np.arange(len(fields))
    rows = [{
        "index": i, "subject": fields[i].subject_id,
        "i_value": float(result.i_values[i]),
        "depth": float(result.depth_values[i]),
        "rank": int(ranks[i]),
        "selected": bool(i == result.selected_index),
    } for i in range(len(fields))]
    _write_rows(run, rows, ("index", "subject", "i_value", "depth", "rank", "selected"),
                "representative.csv")
    summary = {"selected_index": result.selected_index,
               "selected_subject": fields[result.selected_index].subject_id,
               "order": [int(i) for i in result.order]}
    run.out("representative.summary.json").write_text(
        json.dumps(summary, indent=1) + "\n", encoding="utf-8")


def _cmd_synth(run: _Run) -> None:
    args = run.args
    f = neuro.synth_field4d(tuple(args.shape), args.scenario, args.seed,
                            subject=args.subject, scan=args.scan)
    neuro.write_field4d(f, run.out("synth.fd4d"))


_HANDLERS = {
    "center": _cmd_center,
    "depth": _cmd_depth,
    "sim-convergence": _cmd_sim_convergence,
    "sim-identify": _cmd_sim_identify,
    "mask": _cmd_mask,
    "deconvolve": _cmd_deconvolve,
    "corr-vt": _cmd_corr_vt,
    "testretest": _cmd_testretest,
    "representative": _cmd_representative,
    "synth": _cmd_synth,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvedepth", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=0,
                        help="worker cap for replicate loops (0 = auto); results do not depend on it")
    common.add_argument("--out-dir", default=".", help="directory for outputs")
    common.add_argument("--out", default=None, help="primary output path (stem shared by sidecars)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="|".join(SUBCOMMANDS))

    p = sub.add_parser("center", parents=[common], help="random center of a curve set")
    p.add_argument("--input", required=True)
    p.add_argument("--metric", default="l2", choices=("l2", "l2riemann", "sup", "hyperbolic"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--full-candidates", action="store_true")

    p = sub.add_parser("depth", parents=[common], help="depth of every curve in a set")
    p.add_argument("--input", required=True)
    p.add_argument("--method", required=True, choices=_DEPTH_METHODS)
    p.add_argument("--metric", default="l2", choices=("l2", "l2riemann", "sup", "hyperbolic"))
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--projections", type=int, default=1)

    p = sub.add_parser("sim-convergence", parents=[common],
                       help="distance of the random deepest curve to the true deepest set")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--sd", type=float, default=0.0)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--m", type=int, nargs="+", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("sim-identify", parents=[common],
                       help="deepest-index identification rate per depth method")
    p.add_argument("--N", type=int, nargs="+", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--sd", type=float, nargs="+", required=True)
    p.add_argument("--methods", default="idt,mbd,band,rtukey:1,rtukey:10,random")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("mask", parents=[common], help="threshold a field into a voxel mask")
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=float, required=True)

    p = sub.add_parser("deconvolve", parents=[common],
                       help="replace voxel time courses by their depth values")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", default=None, help="mask file; otherwise --threshold is applied")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--metric", default="l2", choices=("l2", "l2riemann", "sup", "hyperbolic"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("corr-vt", parents=[common],
                       help="correlation of a depth image with external voxel values")
    p.add_argument("--image", required=True, help="depth image CSV (with JSON sidecar)")
    p.add_argument("--vt", required=True, help="external values CSV x,y,z,value")
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--corr", choices=("pearson", "spearman"), default="pearson")

    p = sub.add_parser("testretest", parents=[common],
                       help="same-subject vs cross-subject reproducibility of depth images")
    p.add_argument("--image", action="append", required=True,
                   metavar="SUBJECT:SCAN:PATH")
    p.add_argument("--p", type=float, nargs="+",
                   default=[10, 20, 30, 40, 50, 60, 70, 80, 90])
    p.add_argument("--corr", choices=("pearson", "spearman"), default="pearson")

    p = sub.add_parser("representative", parents=[common],
                       help="pick the representative field of a set by intensity depth")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--threshold", type=float, required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic 4D phantom")
    p.add_argument("--shape", type=int, nargs=4, required=True, metavar=("X", "Y", "Z", "T"))
    p.add_argument("--scenario", required=True, choices=("phantom_brain", "planted_retest"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--subject", type=int, default=0)
    p.add_argument("--scan", type=int, default=0)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.subcommand == "deconvolve" and not args.mask and args.threshold is None:
        print(json.dumps({"error": "UsageError",
                          "message": "deconvolve needs --mask or --threshold"}),
              file=sys.stderr)
        return 2
    run = _Run(args, argv)
    try:
        _HANDLERS[args.subcommand](run)
        run.finish()
        return 0
    except (CurveDepthError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
