"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .dedup import default_tau
from .exceptions import DomainError, FitError, FormatError, SplineCritError
from .extraction import NewtonConfig, extract_all, resolve_threads
from .fitting import fit_adaptive, fit_fixed
from .metrics import align
from .pl import pl_critical_points, sample_grid, upsampled_resolution
from .synthetic import FIELDS, SchwefelSpec, analytic_field, generate_field

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _echo(args, config: dict):
    if not getattr(args, "json", False):
        print("config: " + " ".join(f"{k}={v}" for k, v in config.items()))


def _emit_json(payload):
    print(json.dumps(payload, indent=2, sort_keys=True, default=float))


def cmd_gen_schwefel(args):
    spec = SchwefelSpec(dim=args.dim, k=args.k, samples=args.samples,
                        domain=tuple(args.domain) if args.domain else None)
    _echo(args, {"command": "gen-schwefel", "dim": spec.dim, "k": spec.k,
                 "samples": spec.samples, "domain": spec.bounds, "output": args.output})
    io.write_grid(generate_field(spec), args.output)
    return 0


def cmd_gen(args):
    field = analytic_field(args.kind, args.dim, args.samples, tuple(args.domain))
    _echo(args, {"command": "gen", "kind": args.kind, "dim": args.dim, "samples": args.samples,
                 "domain": tuple(args.domain), "output": args.output})
    io.write_grid(field, args.output)
    return 0


def cmd_fit(args):
    field = io.read_grid(args.field)
    out = args.output or str(Path(args.field).with_suffix(".model"))
    config = {"command": "fit", "field": args.field, "degree": args.degree, "output": out}
    if args.adaptive:
        config.update(adaptive=True, tol=args.tol, max_rounds=args.max_rounds,
                      initial_controls=args.initial_controls)
        _echo(args, config)
        model, report = fit_adaptive(field, args.degree, args.tol, args.max_rounds,
                                     args.initial_controls)
    else:
        if not args.controls:
            raise UsageError("--controls is required unless --adaptive is given")
        controls = args.controls if len(args.controls) > 1 else args.controls * field.dim
        if len(controls) != field.dim:
            raise UsageError(f"--controls needs 1 or {field.dim} values")
        config["controls"] = tuple(controls)
        _echo(args, config)
        model, report = fit_fixed(field, args.degree, controls)
    io.write_model(model, out)
    result = {"rms_error": report.rms_error, "max_error": report.max_error,
              "rounds": report.rounds, "n_controls": list(report.n_controls)}
    if args.json:
        _emit_json({"config": config, "report": result})
    else:
        print(" ".join(f"{k}={v}" for k, v in result.items()))
    return 0


def _newton_config(args, model) -> NewtonConfig:
    tau = args.tau
    if args.tau_cells is not None:
        if model.source_samples is None:
            raise UsageError("--tau-cells needs a model with a recorded source grid")
        tau = args.tau_cells * default_tau(model.source_samples) / 0.999
    return NewtonConfig(eps=args.eps, max_iter=args.max_iter, delta=args.delta,
                        xi_factor=args.xi_factor, tau=tau, init_per_axis=args.init_per_axis)


def cmd_extract(args):
    model = io.read_model(args.model)
    cfg = _newton_config(args, model)
    out = args.output or str(Path(args.model).with_suffix(".cpts"))
    threads = resolve_threads(args.threads)
    file_config = {"eps": cfg.eps, "max_iter": cfg.max_iter, "delta": cfg.delta,
                   "xi_factor": cfg.xi_factor, "tau": cfg.tau,
                   "init_per_axis": cfg.init_per_axis or "degree+1"}
    config = {"command": "extract", "model": args.model, "output": out, **file_config,
              "threads": threads}
    _echo(args, config)
    points, filt, stats = extract_all(model, cfg, threads)
    io.write_points(points, out, "cpe", model, file_config)
    if args.json:
        payload = {"config": config, "count": len(points)}
        if args.report_filtration:
            payload["filtration"] = filt.summary()
        if args.stats:
            payload["stats"] = stats.to_dict()
        _emit_json(payload)
        return 0
    print(f"critical_points={len(points)} " + " ".join(
        f"{k}={sum(p.kind == k for p in points)}" for k in ("minimum", "saddle", "maximum")))
    if args.report_filtration:
        print(filt.summary_line())
    if args.stats:
        print(stats.to_text())
    return 0


def _pl_resolution(args, model):
    if args.resolution:
        res = args.resolution if len(args.resolution) > 1 else args.resolution * model.dim
        return tuple(res)
    if model.source_samples is None:
        raise UsageError("model has no recorded source grid; pass --resolution")
    return upsampled_resolution(model.source_samples, args.ratio)


def cmd_pl_extract(args):
    model = io.read_model(args.model)
    res = _pl_resolution(args, model)
    out = args.output or str(Path(args.model).with_suffix(".pl.cpts"))
    config = {"command": "pl-extract", "model": args.model, "ratio": args.ratio,
              "resolution": res, "output": out}
    _echo(args, config)
    points = pl_critical_points(sample_grid(model, res))
    io.write_points(points, out, "pl", model, {"ratio": args.ratio, "resolution": res})
    if args.json:
        _emit_json({"config": config, "count": len(points)})
    else:
        print(f"critical_points={len(points)}")
    return 0


def cmd_compare(args):
    ha, A = io.read_points(args.a)
    hb, B = io.read_points(args.b)
    cell = ha.get("cell") or hb.get("cell")
    if cell is None:
        raise UsageError("neither file records a source grid cell size")
    config = {"command": "compare", "a": args.a, "b": args.b,
              "threshold_cells": args.threshold_cells}
    _echo(args, config)
    report = align(A, B, args.threshold_cells, scale=cell)
    if args.json:
        _emit_json({"config": config, "report": report.as_dict()})
    else:
        print(report.to_text())
    return 0


def cmd_dump_grid(args):
    model = io.read_model(args.model)
    res = _pl_resolution(args, model)
    _echo(args, {"command": "dump-grid", "model": args.model, "resolution": res,
                 "output": args.output})
    grid = sample_grid(model, res)
    axes = [lo + ax * (hi - lo) for ax, (lo, hi) in zip(grid.axes, model.extents)]
    if args.output.endswith(".csv"):
        io.write_csv_grid(grid.values, axes, args.output)
    else:
        from .fitting import GridScalarField
        io.write_grid(GridScalarField(grid.values, model.extents), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splinecrit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-schwefel", help="sample the scaled Schwefel function")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--domain", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_schwefel)

    p = sub.add_parser("gen", help="sample a closed-form test field")
    p.add_argument("--kind", choices=sorted(FIELDS), required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=41)
    p.add_argument("--domain", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit a spline model to a grid file")
    p.add_argument("field")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--controls", type=int, nargs="+")
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--initial-controls", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    defaults = NewtonConfig()
    p = sub.add_parser("extract", help="extract critical points with Newton's method")
    p.add_argument("model")
    p.add_argument("--eps", type=float, default=defaults.eps)
    p.add_argument("--max-iter", type=int, default=defaults.max_iter)
    p.add_argument("--delta", type=float, default=defaults.delta)
    p.add_argument("--xi-factor", type=float, default=defaults.xi_factor)
    p.add_argument("--tau", type=float, default=defaults.tau)
    p.add_argument("--tau-cells", type=float, help="tau in source-grid cells (overrides --tau)")
    p.add_argument("--init-per-axis", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("--stats", action="store_true")
    p.add_argument("--report-filtration", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract)

    for name, func, helptext in (("pl-extract", cmd_pl_extract, "PL critical points of a sampled model"),
                                 ("dump-grid", cmd_dump_grid, "write model samples for plotting")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("model")
        p.add_argument("--ratio", type=float, default=1.0)
        p.add_argument("--resolution", type=int, nargs="+")
        p.add_argument("-o", "--output", required=(name == "dump-grid"))
        if name == "pl-extract":
            p.add_argument("--json", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="align two critical-point files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--threshold-cells", type=float, default=1.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"splinecrit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"splinecrit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FitError, DomainError, SplineCritError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"splinecrit: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
