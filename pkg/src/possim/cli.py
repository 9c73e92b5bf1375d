"""Command-line front end: contour/probe/marginal/severity CSV emitters,
validity audits, and one-shot reproduction of the worked examples.

All commands write UTF-8 CSV with a ``#`` provenance header listing the
effective settings (defaults: grid 2001, samples 10000, seed 0, alpha
0.05).  Identical command line and seed give byte-identical output.

Exit codes: 0 success; 2 malformed input or usage error; 3 capability
error (an evaluator was requested that the model cannot provide);
4 validity audit with at least one failing cell.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from possim import __version__
from possim.contour import write_contour_csv
from possim.errors import CapabilityError, DataFormatError, PossimError
from possim.hypotheses import IntervalSet
from possim.likelihood_im import (
    DEFAULT_GRID_POINTS,
    CalibrationConfig,
    build_im,
)
from possim.marginal import (
    _feature_by_name,
    display_phi_grid,
    marginal_im,
)
from possim.models import (
    BinomialData,
    BinomialModel,
    NormalData,
    NormalMeanModel,
    read_binomial_csv,
    read_correlation_csv,
    read_normal_csv,
    read_table_csv,
)
from possim.severity import compare_probing
from possim.validity import (
    DEFAULT_ALPHAS,
    POLICIES,
    audit_strong_validity,
    audit_uniform_validity,
)

DEFAULTS_NOTE = "defaults: grid=2001 samples=10000 seed=0 alpha=0.05"


def _default_seed() -> int:
    env = os.environ.get("POSSIM_SEED", "")
    try:
        return int(env) if env.strip() else 0
    except ValueError:
        return 0


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _header(args, extra=""):
    parts = [f"possim v{__version__}", DEFAULTS_NOTE]
    if extra:
        parts.append(extra)
    return " | ".join(parts)


def _load_model_data(args):
    """Resolve (model, data) from --model plus flags or a --data file."""
    kind = args.model
    if kind == "normal":
        if args.data:
            data = read_normal_csv(args.data)
        elif args.ybar is not None:
            data = NormalData(args.ybar)
        else:
            raise DataFormatError("normal model needs --ybar or --data")
        return NormalMeanModel(args.sd), data
    if kind == "binomial":
        if args.data:
            return read_binomial_csv(args.data)
        if args.y is None or args.n is None:
            raise DataFormatError("binomial model needs --y and --n (or --data)")
        model = BinomialModel(args.n)
        data = BinomialData(args.y)
        model.validate(data)
        return model, data
    if kind == "correlation":
        if not args.data:
            raise DataFormatError("correlation model needs --data (v1,v2 pairs)")
        return read_correlation_csv(args.data)
    if kind == "table":
        if not args.data:
            raise DataFormatError("table model needs --data (y00,y01,y10,y11)")
        return read_table_csv(args.data)
    raise DataFormatError(f"unknown model {kind!r}")


def _grid_from_args(model, data, args):
    if args.grid_lo is not None and args.grid_hi is not None:
        if not args.grid_lo < args.grid_hi:
            raise DataFormatError("--grid-lo must be below --grid-hi")
        return np.linspace(args.grid_lo, args.grid_hi, args.grid_points)
    return None  # build_im computes the default grid


def _cfg_from_args(args) -> CalibrationConfig:
    return CalibrationConfig(
        mc_samples=args.samples,
        seed=args.seed,
        common_random_numbers=not args.no_crn,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_contour(args) -> int:
    model, data = _load_model_data(args)
    im = build_im(
        model, data, cfg=_cfg_from_args(args), grid=_grid_from_args(model, data, args),
        n_points=args.grid_points, method=args.method,
    )
    extra = (
        f"contour model={args.model} method={args.method} "
        f"grid_points={args.grid_points} samples={args.samples} seed={args.seed}"
    )
    with _open_out(args.out) as fh:
        write_contour_csv(im.contour, fh, _header(args, extra))
    return 0


def cmd_probe(args) -> int:
    model, data = _load_model_data(args)
    im = build_im(
        model, data, cfg=_cfg_from_args(args), grid=_grid_from_args(model, data, args),
        n_points=args.grid_points, method=args.method,
    )
    if im.contour.ndim != 1:
        raise CapabilityError("probe curves are defined for scalar parameters")
    lo, hi = im.space
    grid = im.contour.grid
    extra = (
        f"probe model={args.model} direction={args.direction} "
        f"grid_points={grid.shape[0]} samples={args.samples} seed={args.seed}; "
        "possibility uses the closed form of the hypothesis at theta "
        "(contours are continuous), necessity its open complement"
    )
    with _open_out(args.out) as fh:
        fh.write(f"# {_header(args, extra)}\n")
        fh.write("theta,possibility,necessity\n")
        for t in grid:
            if args.direction == "gt":
                h_closed = IntervalSet.interval(t, hi)
                comp = IntervalSet.interval(lo, t)  # complement of {Theta > t}
            else:
                h_closed = IntervalSet.interval(lo, t)
                comp = IntervalSet.interval(t, hi)  # complement of {Theta <= t}
            poss = im.possibility(h_closed)
            nec = 1.0 - im.possibility(comp)
            fh.write(f"{t:.17g},{poss:.17g},{nec:.17g}\n")
    return 0


def cmd_marginal(args) -> int:
    model, data = read_table_csv(args.data)
    feat = _feature_by_name(args.feature)
    im = build_im(model, data, n_points=args.lattice_points)
    mim = marginal_im(im, feat, model, data, n_points=args.phi_points)
    lo, hi = feat.range
    extra = (
        f"marginal feature={args.feature} lattice={args.lattice_points} "
        f"phi_points={args.phi_points}"
    )
    if args.phi is not None:
        h_leq = IntervalSet.interval(lo, args.phi)
        poss = mim.possibility(h_leq)
        nec_gt = 1.0 - poss
        with _open_out(args.out) as fh:
            fh.write(f"# {_header(args, extra)}\n")
            fh.write("phi,possibility_leq,necessity_gt\n")
            fh.write(f"{args.phi:.17g},{poss:.17g},{nec_gt:.17g}\n")
        return 0
    phis = display_phi_grid(im, feat, model, data, args.phi_points)
    with _open_out(args.out) as fh:
        fh.write(f"# {_header(args, extra)}\n")
        if args.measures:
            fh.write("phi,necessity,possibility\n")
            for p in phis:
                if args.direction == "gt":
                    h = IntervalSet.interval(p, hi, lo_open=True)
                else:
                    h = IntervalSet.interval(lo, p)
                fh.write(
                    f"{p:.17g},{mim.necessity(h):.17g},{mim.possibility(h):.17g}\n"
                )
        else:
            fh.write("phi,pi\n")
            vals = np.interp(phis, mim.contour.grid, mim.contour.values)
            for p, v in zip(phis, vals):
                fh.write(f"{p:.17g},{v:.17g}\n")
    return 0


def cmd_severity(args) -> int:
    model = NormalMeanModel(args.sd)
    grid = None
    if args.grid_lo is not None and args.grid_hi is not None:
        grid = np.linspace(args.grid_lo, args.grid_hi, args.grid_points)
    report = compare_probing(
        model, args.ybar, args.theta0, alpha=args.alpha, theta_grid=grid,
        n_points=args.grid_points,
    )
    extra = (
        f"severity ybar={args.ybar} theta0={args.theta0} alpha={args.alpha} "
        f"sd={args.sd} case={report.case} probing={report.probed}"
    )
    with _open_out(args.out) as fh:
        report.to_csv(fh, _header(args, extra))
    return 0


def cmd_validate(args) -> int:
    model, _ = _validate_model(args)
    thetas = _validate_thetas(model, args)
    cfg = CalibrationConfig(mc_samples=args.samples, seed=args.seed)
    if args.policy == "strong":
        report = audit_strong_validity(
            model, thetas, n_reps=args.n, alpha_grid=tuple(args.alpha),
            seed=args.seed, cfg=cfg,
        )
    else:
        opts = {}
        if args.h_bound is not None:
            opts["h_bound"] = args.h_bound
        report = audit_uniform_validity(
            model, thetas, n_reps=args.n, alpha_grid=tuple(args.alpha),
            policy=args.policy, seed=args.seed, cfg=cfg, policy_options=opts,
        )
    extra = (
        f"validate model={args.model} policy={args.policy} n={args.n} "
        f"seed={args.seed} samples={args.samples}"
    )
    with _open_out(args.out) as fh:
        report.to_csv(fh, _header(args, extra))
    print(report.summary(), file=sys.stderr)
    return 0 if report.all_pass else 4


def _validate_model(args):
    if args.model == "normal":
        return NormalMeanModel(args.sd), None
    if args.model == "binomial":
        if args.n_trials is None:
            raise DataFormatError("binomial validation needs --n-trials")
        return BinomialModel(args.n_trials), None
    if args.model == "correlation":
        if args.n_pairs is None:
            raise DataFormatError("correlation validation needs --n-pairs")
        from possim.models import BivariateCorrelationModel

        return BivariateCorrelationModel(args.n_pairs), None
    if args.model == "table":
        if args.n_trials is None:
            raise DataFormatError("table validation needs --n-trials (per row)")
        from possim.models import TwoByTwoModel

        return TwoByTwoModel((args.n_trials, args.n_trials)), None
    raise DataFormatError(f"unknown model {args.model!r}")


def _validate_thetas(model, args):
    from possim.models import TwoByTwoModel

    if not args.theta:
        raise DataFormatError("provide at least one --theta")
    if isinstance(model, TwoByTwoModel):
        out = []
        for t in args.theta:
            parts = t.split(";")
            if len(parts) != 2:
                raise DataFormatError("table thetas use the form t0;t1")
            out.append((float(parts[0]), float(parts[1])))
        return out
    return [float(t) for t in args.theta]


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

FIGURES = ("fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4", "fig5")


def cmd_reproduce(args) -> int:
    if args.figure not in FIGURES:
        raise DataFormatError(f"unknown figure id {args.figure!r}; choose from {FIGURES}")
    os.makedirs(args.outdir, exist_ok=True)
    seed = args.seed
    written = _reproduce(args.figure, args.outdir, seed)
    if args.gnuplot:
        written.append(_write_gnuplot(args.figure, args.outdir, written))
    for path in written:
        print(path)
    return 0


def _reproduce(figure: str, outdir: str, seed: int) -> list:
    from possim.marginal import difference_feature, relative_risk_feature
    from possim.models import load_clinical_trial, load_law_school
    from possim.pvalues import OneSidedPValueFunction, pval_left

    paths = []

    def out(name):
        path = os.path.join(outdir, name)
        paths.append(path)
        return path

    if figure in ("fig1a", "fig1b"):
        ybar = 152.0 if figure == "fig1a" else 151.0
        model = NormalMeanModel(1.0)
        grid = np.linspace(149.0, 154.0, 1001)
        with open(out(f"{figure}_pvalue.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# {figure}: theta, test-based possibility of (Theta <= theta)\n")
            fh.write("theta,possibility_leq\n")
            for t, v in zip(grid, pval_left(model, ybar, grid)):
                fh.write(f"{t:.17g},{v:.17g}\n")
        report = compare_probing(model, ybar, 150.0, alpha=0.05, theta_grid=grid)
        with open(out(f"{figure}_severity.csv"), "w", encoding="utf-8") as fh:
            report.to_csv(fh, f"{figure}: severity vs IM necessity, ybar={ybar}")
    elif figure in ("fig2a", "fig2b"):
        ybar = 152.0 if figure == "fig2a" else 151.0
        model = NormalMeanModel(1.0)
        data = NormalData(ybar)
        im = build_im(model, data)
        grid = np.linspace(149.0, 154.0, 1001)
        lo, hi = im.space
        with open(out(f"{figure}_holistic.csv"), "w", encoding="utf-8") as fh:
            fh.write(
                f"# {figure}: holistic IM curves, ybar={ybar}; pi is the contour\n"
            )
            fh.write("theta,pi,possibility_leq,necessity_gt,necessity_leq\n")
            for t in grid:
                pi = float(im.contour.exact_eval(t))
                poss_leq = im.possibility(IntervalSet.interval(lo, t))
                nec_gt = 1.0 - poss_leq
                nec_leq = im.necessity(IntervalSet.interval(lo, t))
                fh.write(
                    f"{t:.17g},{pi:.17g},{poss_leq:.17g},{nec_gt:.17g},{nec_leq:.17g}\n"
                )
    elif figure == "fig3":
        model = BinomialModel(20)
        data = BinomialData(8)
        im = build_im(model, data)
        with open(out("fig3a_contour.csv"), "w", encoding="utf-8") as fh:
            write_contour_csv(im.contour, fh, "fig3a: binomial contour, y=8 n=20")
        lo, hi = im.space
        with open(out("fig3b_necessity.csv"), "w", encoding="utf-8") as fh:
            fh.write("# fig3b: necessity of (Theta > theta), y=8 n=20\n")
            fh.write("theta,necessity_gt\n")
            for t in im.contour.grid:
                nec = 1.0 - im.possibility(IntervalSet.interval(lo, t))
                fh.write(f"{t:.17g},{nec:.17g}\n")
    elif figure == "fig4":
        model, data = load_law_school()
        cfg = CalibrationConfig(mc_samples=10000, seed=seed)
        im = build_im(model, data, cfg=cfg, n_points=801)
        with open(out("fig4a_contour.csv"), "w", encoding="utf-8") as fh:
            write_contour_csv(
                im.contour, fh,
                f"fig4a: correlation contour, law-school pairs, M=10000 seed={seed}",
            )
        lo, hi = im.space
        with open(out("fig4b_necessity.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# fig4b: necessity of (Theta > theta), M=10000 seed={seed}\n")
            fh.write("theta,necessity_gt\n")
            for t in im.contour.grid:
                nec = 1.0 - im.possibility(IntervalSet.interval(lo, t))
                fh.write(f"{t:.17g},{nec:.17g}\n")
    elif figure == "fig5":
        model, data = load_clinical_trial()
        im = build_im(model, data, n_points=201)
        with open(out("fig5a_joint.csv"), "w", encoding="utf-8") as fh:
            write_contour_csv(im.contour, fh, "fig5a: joint contour, clinical table")
        diff = difference_feature()
        mim_d = marginal_im(im, diff, model, data, n_points=401)
        with open(out("fig5b_difference.csv"), "w", encoding="utf-8") as fh:
            fh.write("# fig5b: difference feature, possibility of (Phi <= phi) and "
                     "necessity of (Phi > phi)\n")
            fh.write("phi,possibility_leq,necessity_gt\n")
            for p in np.linspace(-0.2, 0.65, 341):
                poss = mim_d.possibility(IntervalSet.interval(-1.0, p))
                fh.write(f"{p:.17g},{poss:.17g},{1.0 - poss:.17g}\n")
        rr = relative_risk_feature()
        mim_r = marginal_im(im, rr, model, data, n_points=401)
        with open(out("fig5c_rr_contour.csv"), "w", encoding="utf-8") as fh:
            fh.write("# fig5c: relative-risk marginal contour\n")
            fh.write("phi,pi\n")
            for p in np.linspace(0.5, 4.5, 401):
                v = float(mim_r.contour.exact_eval(p))
                fh.write(f"{p:.17g},{v:.17g}\n")
        with open(out("fig5d_rr_necessity.csv"), "w", encoding="utf-8") as fh:
            fh.write("# fig5d: necessity of (Phi > phi), relative risk\n")
            fh.write("phi,necessity_gt\n")
            for p in np.linspace(0.5, 4.5, 401):
                poss = mim_r.possibility(IntervalSet.interval(0.0, p))
                fh.write(f"{p:.17g},{1.0 - poss:.17g}\n")
    return paths


def _write_gnuplot(figure: str, outdir: str, csv_paths: list) -> str:
    path = os.path.join(outdir, f"{figure}.gp")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# gnuplot script for {figure}\n")
        fh.write("set datafile separator ','\n")
        fh.write("set yrange [0:1.05]\nset key outside\n")
        fh.write(f"set terminal pngcairo size 900,600\nset output '{figure}.png'\n")
        plots = []
        for p in csv_paths:
            if p.endswith(".csv"):
                name = os.path.basename(p)
                plots.append(f"'{name}' skip 2 using 1:2 with lines title '{name}'")
        fh.write("plot " + ", \\\n     ".join(plots) + "\n")
    return path


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_model_flags(p):
    p.add_argument("--model", required=True,
                   choices=["normal", "binomial", "correlation", "table"])
    p.add_argument("--sd", type=float, default=1.0,
                   help="normal model: sd of the sample mean (default 1)")
    p.add_argument("--ybar", type=float, help="normal model: observed sample mean")
    p.add_argument("--n", type=int, help="binomial model: number of trials")
    p.add_argument("--y", type=int, help="binomial model: observed successes")
    p.add_argument("--data", help="CSV data file (see README for per-model formats)")


def _add_grid_flags(p):
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--grid-lo", type=float, default=None)
    p.add_argument("--grid-hi", type=float, default=None)


def _add_mc_flags(p):
    p.add_argument("--samples", type=int, default=10000,
                   help="Monte Carlo calibration sample size (default 10000)")
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help="RNG seed (default 0; override with POSSIM_SEED)")
    p.add_argument("--no-crn", action="store_true",
                   help="disable common random numbers across the grid")
    p.add_argument("--method", choices=["auto", "exact", "mc"], default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="possim",
        description="Possibilistic inferential models: contours, probing "
                    "curves, marginals, severity, and validity audits.",
    )
    parser.add_argument("--version", action="version", version=f"possim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("contour", help="possibility contour as theta,pi CSV")
    _add_model_flags(p)
    _add_grid_flags(p)
    _add_mc_flags(p)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_contour)

    p = sub.add_parser("probe", help="possibility/necessity curves for "
                                     "one-sided hypotheses")
    _add_model_flags(p)
    _add_grid_flags(p)
    _add_mc_flags(p)
    p.add_argument("--direction", choices=["gt", "leq"], required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("marginal", help="extension-principle marginal for a "
                                        "2x2-table feature")
    p.add_argument("--data", required=True, help="table CSV (y00,y01,y10,y11)")
    p.add_argument("--feature", choices=["difference", "relative-risk"],
                   required=True)
    p.add_argument("--phi", type=float, default=None,
                   help="report possibility of (Phi <= phi) at this single phi")
    p.add_argument("--phi-points", type=int, default=501)
    p.add_argument("--lattice-points", type=int, default=201)
    p.add_argument("--direction", choices=["leq", "gt"], default="gt",
                   help="hypothesis family for --measures output")
    p.add_argument("--measures", action="store_true",
                   help="emit phi,necessity,possibility instead of phi,pi")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("severity", help="severity vs IM probing comparison")
    p.add_argument("--ybar", type=float, required=True)
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--sd", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    _add_grid_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_severity)

    p = sub.add_parser("validate", help="simulation audit of the validity "
                                        "guarantees")
    p.add_argument("--model", required=True,
                   choices=["normal", "binomial", "correlation", "table"])
    p.add_argument("--sd", type=float, default=1.0)
    p.add_argument("--n-trials", type=int, default=None)
    p.add_argument("--n-pairs", type=int, default=None)
    p.add_argument("--theta", action="append", default=[],
                   help="true parameter (repeatable; table: t0;t1)")
    p.add_argument("--n", type=int, default=10000, help="replicates per theta")
    p.add_argument("--alpha", type=float, action="append", default=None)
    p.add_argument("--policy", default="strong",
                   choices=["strong", *POLICIES])
    p.add_argument("--h-bound", type=float, default=None,
                   help="fixed-family policy: null upper bound h")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reproduce", help="regenerate the worked-example CSVs")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--outdir", default=".")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--gnuplot", action="store_true",
                   help="emit a ready gnuplot script alongside the CSVs")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "alpha", None) is None and args.command == "validate":
        args.alpha = list(DEFAULT_ALPHAS)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"possim: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"possim: {exc}", file=sys.stderr)
        return 3
    except PossimError as exc:
        print(f"possim: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"possim: {exc}", file=sys.stderr)
        return 2


def entrypoint():  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
