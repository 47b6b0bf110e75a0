"""``hjfrac`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 compute error,
3 suite (or experiment) verdict FAIL.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .convolution import convexity_report, inf_convolution, lipschitz_seminorm, sup_convolution
from .grid import FieldFormatError, ScalarField, SpaceTimeField, export_csv, read_field, write_field
from .nonlocal_ops import (EllipticityBounds, KernelSpec, QuadratureScheme, extremal_minus, extremal_plus,
                           frac_laplacian_quadrature, frac_laplacian_spectral, linear_operator,
                           nonlocal_constant)
from .regularity import cascade, fit_exponent, fit_modulus_exponent, telescoping_bootstrap
from .scenario import run_scenario, write_csv, write_json
from .suites import EXPERIMENT_HEADER, EXPERIMENTS, SUITES, UnknownSuiteError, run_experiment, run_suite

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_FAIL = 0, 1, 2, 3
OPERATORS = ("fraclap-spectral", "fraclap-quad", "linear", "mplus", "mminus")

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", metavar="PATH", default=d(None), help="scenario TOML file")
    p.add_argument("--seed", type=int, metavar="N", default=d(None), help="override the seed")
    p.add_argument("--out", metavar="DIR", default=d(None), help="output directory")
    p.add_argument("--threads", type=int, metavar="N", default=d(1), help="parallel suite members")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hjfrac", description="Critical Hamilton-Jacobi / fractional diffusion laboratory.")
    parser.add_argument("--version", action="version", version=f"hjfrac {__version__}")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("operator", parents=[common], help="apply a nonlocal operator to a field file")
    p.add_argument("field")
    p.add_argument("--op", choices=OPERATORS, default="fraclap-spectral")
    p.add_argument("--s", type=float, default=0.5, help="order of the fractional Laplacian")
    p.add_argument("--a", type=float, help="constant kernel value for 'linear' (default C_{n,1/2})")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--Lam", type=float, default=1.0)
    p.add_argument("--tail-mode", choices=("periodic", "truncate"), default="periodic")
    p.add_argument("--tail-radius", type=float)
    p.add_argument("--tail-tolerance", type=float)

    p = sub.add_parser("convolve", parents=[common], help="sup- or inf-convolution of a field file")
    p.add_argument("field")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--kind", choices=("sup", "inf"), default="sup")

    p = sub.add_parser("diagnose-convexity", parents=[common], help="sup/inf-convolution property report")
    p.add_argument("field")
    p.add_argument("--epsilon", type=float, required=True)

    sub.add_parser("solve", parents=[common], help="run the scenario given by --config")

    p = sub.add_parser("diagnose", parents=[common], help="regularity diagnostics of a field file")
    p.add_argument("field")
    p.add_argument("--t", type=float, help="frame time for space-time files (default: last)")
    p.add_argument("--alpha", type=float, help="starting exponent for the bootstrap ladder")
    p.add_argument("--center", type=float, nargs="+", help="cascade centre x0 (space-time files)")
    p.add_argument("--A", type=float, default=1.0, help="drift bound setting the cascade ratio")

    p = sub.add_parser("experiment", parents=[common], help="run a named experiment and tabulate it")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--members", type=int, default=8, help="ensemble size where applicable")

    p = sub.add_parser("suite", parents=[common], help="run a seeded suite")
    p.add_argument("name", help=f"one of: {', '.join(SUITES)}")
    p.add_argument("--size", action="append", default=[], metavar="KIND=COUNT",
                   help="override the member count of one kind")

    p = sub.add_parser("validate", parents=[common], help="validate a scenario config or field file")
    p.add_argument("path", nargs="?", help="config file (defaults to --config)")
    p.add_argument("--field", help="validate a field file instead")
    return parser


def _out_dir(args, default="out") -> str:
    out = args.out or default
    os.makedirs(out, exist_ok=True)
    return out


def _load_scalar(path, t=None) -> ScalarField:
    f = read_field(path)
    if isinstance(f, SpaceTimeField):
        return f.frame(f.n_frames - 1) if t is None else f.frame_at(t)
    return f


def _save(out, stem, field) -> list[str]:
    paths = [os.path.join(out, stem + ".fld"), os.path.join(out, stem + ".csv")]
    write_field(paths[0], field)
    export_csv(paths[1], field)
    return paths


def cmd_operator(args) -> int:
    f = _load_scalar(args.field)
    scheme = QuadratureScheme(tail_mode=args.tail_mode, tail_radius=args.tail_radius,
                              tail_tolerance=args.tail_tolerance)
    if args.op == "fraclap-spectral":
        r = frac_laplacian_spectral(f, args.s)
    elif args.op == "fraclap-quad":
        r = frac_laplacian_quadrature(f, args.s, scheme)
    elif args.op == "linear":
        a = nonlocal_constant(f.grid.dim, 0.5) if args.a is None else args.a
        r = linear_operator(f, KernelSpec.constant(f.grid, a, EllipticityBounds(a, a)), scheme)
    else:
        bounds = EllipticityBounds(args.lam, args.Lam)
        r = (extremal_plus if args.op == "mplus" else extremal_minus)(f, bounds, scheme)
    paths = _save(_out_dir(args), "operator", r)
    print(f"{args.op}: sup norm {r.sup_norm():.6g}; wrote {', '.join(paths)}")
    return EXIT_OK


def cmd_convolve(args) -> int:
    f = read_field(args.field)
    r = (sup_convolution if args.kind == "sup" else inf_convolution)(f, args.epsilon)
    paths = _save(_out_dir(args), f"{args.kind}_convolution", r)
    print(f"{args.kind}-convolution (eps = {args.epsilon}); wrote {', '.join(paths)}")
    return EXIT_OK


def cmd_diagnose_convexity(args) -> int:
    rep = convexity_report(read_field(args.field), args.epsilon)
    path = os.path.join(_out_dir(args), "convexity.json")
    write_json(path, rep)
    ok = all(rep[k] for k in ("sup_above", "inf_below", "duality_exact", "semiconvexity_ok"))
    ok = ok and rep["lipschitz_ok"]["standard"]
    for k, v in rep["lipschitz_ok"].items():
        print(f"lipschitz bound {k}: {'held' if v else 'violated'} ({rep['lipschitz_bounds'][k]:.6g})")
    print(f"semiconvexity modulus {rep['semiconvexity_modulus']:.6g} vs 2/eps = {rep['semiconvexity_bound']:.6g}")
    print(f"{'PASS' if ok else 'FAIL'}; wrote {path}")
    return EXIT_OK


def cmd_solve(args) -> int:
    if not args.config:
        raise UsageError("solve needs --config PATH")
    cfg = load_config(args.config).with_overrides(seed=args.seed, out=args.out)
    manifest = run_scenario(cfg)
    if manifest.status != "ok":
        print(f"error in stage {manifest.failed_stage}: {manifest.error}", file=sys.stderr)
        return EXIT_COMPUTE
    for name, info in manifest.outputs.items():
        print(f"{info['sha256'][:16]}  {os.path.join(cfg.out, name)}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    f = read_field(args.field)
    report = {}
    frame = f
    if isinstance(f, SpaceTimeField):
        t = float(f.times[-1]) if args.t is None else args.t
        frame = f.frame_at(t)
        report["t"] = t
        if args.center is not None:
            c = cascade(f, (tuple(args.center), t), A=args.A)
            fit = fit_exponent(c)
            report["cascade"] = {"osc": c.osc, "radii": c.radii, "excluded": c.excluded,
                                 "alpha": fit.alpha, "residual": fit.residual}
    fit = fit_modulus_exponent(frame)
    report["holder"] = {"alpha": fit.alpha, "constant": fit.constant, "residual": fit.residual, "window": fit.window}
    report["lipschitz_seminorm"] = lipschitz_seminorm(frame)
    alpha = args.alpha if args.alpha is not None else min(1.0, fit.alpha)
    report["bootstrap"] = telescoping_bootstrap(frame, alpha)
    path = os.path.join(_out_dir(args), "diagnose.json")
    write_json(path, report)
    print(f"alpha {fit.alpha:.4f} (residual {fit.residual:.3g}); "
          f"Lipschitz rung {'reached' if report['bootstrap']['reached_lipschitz'] else 'not reached'}; wrote {path}")
    return EXIT_OK


def _parse_sizes(items) -> dict:
    sizes = {}
    for item in items:
        kind, sep, count = item.partition("=")
        if not sep or not count.strip().isdigit():
            raise UsageError(f"--size expects KIND=COUNT, got {item!r}")
        sizes[kind.strip()] = int(count)
    return sizes


def _report_suite(report, out) -> int:
    paths = report.write(out)
    for line in report.summary_lines():
        print(line)
    print(f"{report.name}: {report.verdict}; wrote {', '.join(paths)}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_suite(args) -> int:
    sizes = _parse_sizes(args.size)
    if args.name in SUITES:
        known = {k.name for k in SUITES[args.name]}
        bad = sorted(set(sizes) - known)
        if bad:
            raise UsageError(f"unknown member kinds {bad} for suite {args.name}; known: {sorted(known)}")
    report = run_suite(args.name, seed=args.seed or 0, threads=args.threads, sizes=sizes)
    return _report_suite(report, _out_dir(args))


def cmd_experiment(args) -> int:
    if args.members < 1:
        raise UsageError("--members must be >= 1")
    rows, passed, notes = run_experiment(args.name, seed=args.seed or 0, members=args.members)
    out = _out_dir(args)
    stem = os.path.join(out, f"experiment_{args.name}")
    write_csv(stem + ".csv", EXPERIMENT_HEADER, rows)
    write_json(stem + ".json", notes)
    print(f"{'PASS' if passed else 'FAIL'} experiment {args.name}; wrote {stem}.csv, {stem}.json")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_validate(args) -> int:
    if args.field:
        f = read_field(args.field)
        kind = "space-time" if isinstance(f, SpaceTimeField) else "scalar"
        print(f"valid {kind} field: dim {f.grid.dim}, n_points {f.grid.n_points}, period {f.grid.period}")
        return EXIT_OK
    path = args.path or args.config
    if not path:
        raise UsageError("validate needs a config path (positional or --config) or --field")
    cfg = load_config(path).with_overrides(seed=args.seed, out=args.out)
    print(json.dumps(cfg.document, indent=2, sort_keys=True, default=str))
    print(f"valid; config hash {cfg.config_hash()}")
    return EXIT_OK


COMMANDS = {
    "operator": cmd_operator, "convolve": cmd_convolve, "diagnose-convexity": cmd_diagnose_convexity,
    "solve": cmd_solve, "diagnose": cmd_diagnose, "experiment": cmd_experiment, "suite": cmd_suite,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required; see hjfrac --help")
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise UsageError("--seed must be >= 0")
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, FieldFormatError, UnknownSuiteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"compute error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
