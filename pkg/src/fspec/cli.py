"""Command-line front end: ``fspec <command> [options]``.

Exit codes: 0 on success, 2 for usage errors or malformed input, 3 when a
numerical routine cannot deliver its guarantee.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import bounds, constructions, measures, projection, spectrum, svg

DEFAULT_SEED = 0x5EED
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValueError):
    pass


# ----------------------------------------------------------------------------
# parsing helpers
# ----------------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """``"a:b:step"`` (inclusive of b) or a comma list; fractions such as ``1/3`` are exact."""
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    try:
        if ":" in text:
            parts = [Fraction(p.strip()) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise UsageError(f"grid {text!r} must be a:b:step with a <= b and step > 0")
            a, b, h = parts
            n = int((b - a) / h)
            vals = [a + i * h for i in range(n + 1)]
        else:
            vals = [Fraction(p.strip()) for p in text.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from None
    if not vals:
        raise UsageError("empty grid")
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise UsageError(f"grid {text!r} is not sorted")
    return np.array([float(v) for v in vals])


def parse_range(text: str) -> range:
    """``"a:b"`` means shells a..b inclusive."""
    try:
        a, b = (int(p) for p in text.split(":"))
    except ValueError:
        raise UsageError(f"shell range {text!r} must look like a:b") from None
    if not 0 <= a <= b:
        raise UsageError("shell range needs 0 <= a <= b")
    return range(a, b + 1)


def parse_seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None


def fraction_arg(text: str) -> str:
    try:
        Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return text.strip()


def load_measure_arg(text: str) -> measures.MeasureExpr:
    """A path to a measure JSON file, or the JSON itself when it starts with ``{``."""
    try:
        if text.lstrip().startswith("{"):
            return measures.from_dict(json.loads(text))
        return measures.load_measure(text)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read measure {text!r}: {exc}") from None


def load_profile_arg(text: str) -> bounds.SetProfile:
    try:
        if text.lstrip().startswith("{"):
            return bounds.SetProfile.from_dict(json.loads(text))
        return bounds.load_profile(text)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read profile {text!r}: {exc}") from None


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bounds.Truth):
        return x.value
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _format(args, default, allowed=("csv", "json", "svg")) -> str:
    fmt = args.format or default
    if fmt not in allowed:
        raise UsageError(f"{args.command} supports --format {'|'.join(allowed)}, not {fmt}")
    return fmt


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def cmd_spectrum(args) -> str:
    fmt = _format(args, "json", ("csv", "json"))
    mu = load_measure_arg(args.measure)
    thetas = parse_grid(args.theta)
    if np.any((thetas < 0) | (thetas > 1)):
        raise UsageError("theta values must lie in [0, 1]")
    plan = spectrum.SamplingPlan(seed=args.seed, mode=args.mode)
    js = parse_range(args.shells) if args.shells else None
    if args.convolution:
        ests = [spectrum.convolution_estimate(mu, args.convolution, plan, js)]
    else:
        ests = spectrum.estimate_spectra(mu, list(thetas), js, plan)
    if fmt == "json":
        return to_json([e.to_dict() for e in ests])
    rows = [(e.theta, s.j, s.value, s.n_samples, s.seed) for e in ests for s in e.shells]
    return to_csv(["theta", "j", "Tj_or_Mj", "n_samples", "seed"], rows)


def cmd_bounds(args) -> str:
    fmt = _format(args, "csv")
    prof = load_profile_arg(args.profile)
    us = parse_grid(args.u_grid) if args.u_grid else np.linspace(0, args.k, 101)
    bp = bounds.bound_profile(prof, args.k, us)
    table = to_csv(["u", "method", "value", "valid"], bp.rows())
    if fmt == "csv":
        return table
    if fmt == "svg":
        return svg.curves_svg(table, title=f"bounds k={args.k}", ylabel="dimension bound", only_valid=True)
    thr = bounds.emptiness_threshold(prof, args.k)
    return to_json({
        "k": args.k, "d": prof.d,
        "u": bp.u, "minimum": bp.minimum, "argmin": list(bp.argmin),
        "methods": {m.name: {"value": m.values, "valid": m.valid} for m in bp.methods},
        "emptiness_threshold": {"value": thr.value, "argmax": thr.argmax, "grid_error": thr.grid_error},
    })


def figure3_csv(args) -> str:
    rows = constructions.figure3_rows(args.alpha, args.beta, args.gamma, points=args.points,
                                      ps_variant=args.ps_variant)
    return to_csv(["k", "u", "method", "value"], rows)


def cmd_figure3(args) -> str:
    fmt = _format(args, "csv")
    table = figure3_csv(args)
    if fmt == "csv":
        return table
    if fmt == "svg":
        return svg.figure3_svg(table)
    return to_json([dict(zip(("k", "u", "method", "value"), r))
                    for r in constructions.figure3_rows(args.alpha, args.beta, args.gamma,
                                                        points=args.points, ps_variant=args.ps_variant)])


def regions_tables(prof, k, baseline, u_grid=None) -> tuple[str, str]:
    """``(cells_csv, boundary_csv)`` for one baseline."""
    reg = bounds.improvement_region(prof, k, baseline, u_grid)
    cells = to_csv(["baseline", "theta", "u", "truth"],
                   ((baseline, c.theta, c.u, c.truth.value) for c in reg.cells))
    th, v = bounds.theta_nodes(prof)
    spec_line = np.interp(reg.boundary_theta, th, v)
    boundary = to_csv(["baseline", "theta", "lower", "upper", "spectrum"],
                      zip([baseline] * len(spec_line), reg.boundary_theta, reg.boundary_lower,
                          reg.boundary_upper, spec_line))
    return cells, boundary


def cmd_regions(args) -> str:
    fmt = _format(args, "csv")
    prof = load_profile_arg(args.profile)
    us = parse_grid(args.u_grid) if args.u_grid else None
    cells, boundary = regions_tables(prof, args.k, args.baseline, us)
    if args.boundary_out:
        with open(args.boundary_out, "w", newline="") as fh:
            fh.write(boundary)
    if fmt == "csv":
        return cells
    if fmt == "svg":
        return svg.regions_svg(boundary)
    return to_json({"cells": list(csv.DictReader(io.StringIO(cells))),
                    "boundary": list(csv.DictReader(io.StringIO(boundary)))})


def cmd_lemma31(args) -> str:
    fmt = _format(args, "csv", ("csv", "json"))
    eta = tuple(int(x) for x in args.eta.split(",")) if args.eta else (8, 64, 4096)
    params = constructions.Lemma31Params(args.s, args.u, eta=eta, stages=args.stages)
    sets = constructions.lemma31_sets(params)
    n = params.eta[params.stages - 1]
    if fmt == "csv":
        rows = [(name, c, Fraction(c, n), Fraction(c + 1, n)) for name, ls in sets.items() for c in ls.cells]
        return to_csv(["set", "cell", "left", "right"], ((a, b, str(c), str(d)) for a, b, c, d in rows))
    stages = constructions.exact_stages(params)
    checks = {}
    for m in stages:
        res = constructions.verify_projection_containment(params, m)
        checks[str(m)] = {"ok": res.ok, "checked": res.checked,
                          "counterexamples": [[str(t) for t in c] for c in res.counterexamples[:20]]}
    return to_json({
        "s": str(params.s), "u": str(params.u), "eta": list(params.eta[:params.stages]),
        "sets": {name: {"exponent": str(ls.exponent), "stage_counts": list(ls.stage_counts),
                        "covering_counts": list(ls.covering_counts), "exact": list(ls.exact),
                        "slope": ls.slope, "intersected_slope": ls.intersected_slope,
                        "cells": len(ls.cells)}
                 for name, ls in sets.items()},
        "exact_stages": stages,
        "containment": checks,
    })


def cmd_example(args) -> str:
    fmt = _format(args, "json", ("csv", "json"))
    ex = constructions.build_example(args.alpha, args.beta, args.gamma)
    if args.emit:
        with open(args.emit, "w") as fh:
            fh.write(to_json(ex.profile.to_dict()))
    facts = {"alpha": ex.alpha, "beta": ex.beta, "gamma": ex.gamma, "dim_H": ex.dim_H,
             "dim_S_conv": ex.dim_S_conv, "spectrum_half": ex.spectrum_half}
    if fmt == "json":
        return to_json(facts)
    return to_csv(["quantity", "value"], facts.items())


def cmd_marstrand(args) -> str:
    fmt = _format(args, "csv", ("csv", "json"))
    if args.measure:
        mu = load_measure_arg(args.measure)
    else:
        c = constructions.cantor_measure("1/3")
        mu = measures.Product((c, c))
        if args.target is None:
            args.target = 2 * np.log(2) / np.log(3)
    if not 1 <= args.k < mu.dim:
        raise UsageError(f"need 1 <= k < d = {mu.dim}, got k={args.k}")
    scales = parse_range(args.scales)
    if args.axis:
        atoms = mu.discretize(args.level)
        frame = projection.Frame.axis(mu.dim, range(args.k))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dim = projection.box_dimension(projection.project_points(atoms, frame), scales)
        trials = [projection.MarstrandTrial(0, frame, dim)]
    else:
        trials = projection.marstrand_trials(mu, args.frames, k=args.k, level=args.level,
                                             seed=args.seed, scales=scales)
    vals = np.array([t.dimension.value for t in trials])
    target = min(args.k, args.target) if args.target is not None else None
    summary = {"n": len(trials), "q10": float(np.quantile(vals, 0.1)),
               "median": float(np.median(vals)), "q90": float(np.quantile(vals, 0.9))}
    if target is not None:
        summary["within_0.1"] = float(np.mean(np.abs(vals - target) <= 0.1))
    if fmt == "json":
        return to_json({"seed": args.seed, "summary": summary,
                        "trials": [{"index": t.index, "frame": t.frame.rows(),
                                    "dimension": t.dimension.value, "stderr": t.dimension.stderr,
                                    "counts": list(t.dimension.counts)} for t in trials]})
    print(" ".join(f"{k}={_cell(v)}" for k, v in summary.items()), file=sys.stderr)
    return to_csv(["index", "frame", "dimension", "stderr"],
                  ((t.index, json.dumps(t.frame.rows()), t.dimension.value, t.dimension.stderr)
                   for t in trials))


def cmd_project(args) -> str:
    fmt = _format(args, "json", ("json",))
    frame = projection.sample_grassmannian(args.d, args.k, np.random.SeedSequence([args.seed, args.frame_seed]))
    out = {"seed": args.seed, "frame_seed": args.frame_seed, "frame": frame.rows()}
    if args.measure:
        mu = load_measure_arg(args.measure)
        if mu.dim != args.d:
            raise UsageError(f"measure lives in R^{mu.dim}, frame in R^{args.d}")
        out["projected"] = projection.project_measure(mu, frame).to_dict()
    return to_json(out)


COMMANDS = {
    "spectrum": cmd_spectrum, "bounds": cmd_bounds, "figure3": cmd_figure3, "regions": cmd_regions,
    "lemma31": cmd_lemma31, "example": cmd_example, "marstrand": cmd_marstrand, "project": cmd_project,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=parse_seed, default=DEFAULT_SEED, help="master seed (default 0x5EED)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json", "svg"), help="output format")

    ap = argparse.ArgumentParser(prog="fspec", description="Fourier spectrum and exceptional projection tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="estimate the Fourier spectrum of a measure")
    p.add_argument("--measure", required=True, help="measure JSON file or inline JSON")
    p.add_argument("--theta", default="0,0.25,0.5,0.75,1", help="theta grid, a:b:step or comma list")
    p.add_argument("--shells", help="shell range a:b")
    p.add_argument("--mode", choices=("auto", "dense", "qmc"), default="auto")
    p.add_argument("--convolution", type=int, metavar="N",
                   help="estimate the Sobolev dimension of the N-fold self-convolution instead")

    p = sub.add_parser("bounds", parents=[common], help="exceptional set bounds over a u-grid")
    p.add_argument("--profile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--u-grid")

    p = sub.add_parser("figure3", parents=[common], help="exceptional bound curves of the product example")
    p.add_argument("--alpha", type=fraction_arg, default="1/3")
    p.add_argument("--beta", type=fraction_arg, default="1/4")
    p.add_argument("--gamma", type=fraction_arg, default="1/5")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--ps-variant", choices=("text", "figure"), default="text")

    p = sub.add_parser("regions", parents=[common], help="where the spectrum bound beats a baseline")
    p.add_argument("--profile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--baseline", choices=("ren_wang", "mattila", "peres_schlag"), required=True)
    p.add_argument("--u-grid")
    p.add_argument("--boundary-out", help="also write the boundary CSV the SVG is drawn from")

    p = sub.add_parser("lemma31", parents=[common], help="lattice sets A, B, C and the containment check")
    p.add_argument("--s", type=fraction_arg, default="3/4")
    p.add_argument("--u", type=fraction_arg, default="1/2")
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--eta", help="comma-separated stage scales (default 8,64,4096)")

    p = sub.add_parser("example", parents=[common], help="closed-form dimensions of the product example")
    p.add_argument("--alpha", type=fraction_arg, default="1/3")
    p.add_argument("--beta", type=fraction_arg, default="1/4")
    p.add_argument("--gamma", type=fraction_arg, default="1/5")
    p.add_argument("--emit", help="write the spectrum profile JSON here")

    p = sub.add_parser("marstrand", parents=[common], help="box dimensions of random projections")
    p.add_argument("--measure", help="measure JSON (default: product of two middle-third Cantor measures)")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--scales", default="4:14", help="dyadic scales a:b")
    p.add_argument("--axis", action="store_true", help="project onto coordinate axes instead of random planes")
    p.add_argument("--target", type=float, help="expected dimension, for the within-0.1 summary")

    p = sub.add_parser("project", parents=[common], help="sample a k-plane and optionally project a measure")
    p.add_argument("--frame-seed", type=int, default=0)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--measure")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args)
    except (UsageError, measures.LevelOverflowError) as exc:
        print(f"fspec {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, UsageError) else EXIT_NUMERIC
    except (ArithmeticError, spectrum.SamplingBudgetError, spectrum.LatticeBudgetError,
            FloatingPointError) as exc:
        print(f"fspec {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"fspec {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
