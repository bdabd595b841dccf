"""Command-line front end.

Exit status: 0 success, 1 usage or parameter error, 2 data error,
3 computation error (no certified bound, explosion, degenerate design).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path as FsPath

from . import __version__
from .bounds import (
    RATE_ONLY,
    corollary31_constants,
    corollary32_optimize,
    estimate_beta_upper,
    loglinear_rate,
    model_constants,
    theorem21_bound,
)
from .data import load_counts_csv
from .exceptions import (
    DataError,
    DegenerateDesignError,
    ExplosionError,
    InvalidStateError,
    NoContractionError,
    ParameterError,
)
from .experiments import SCHEMA_VERSION, DEFAULT_COUPLING_GRID, McDesign, run_coupling_validation, run_power_study
from .models import CovariateSpec, Family, ModelSpec, fmt_float, load_model, simulate_path
from .rng import fresh_seed
from .trend import seasonal_adjust, trend_test

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_COMPUTE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """``argparse`` exits with status 2 on bad usage; we reserve 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(None),
                        help="master seed (drawn from system entropy and reported if omitted)")
    parser.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"), default=d(None),
                        help="report format (default depends on the subcommand)")
    parser.add_argument("--workers", type=int, default=d(1), help="worker threads")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI model file ([model], [covariate] sections)")
    p.add_argument("--model", choices=("linear", "softplus", "loglinear"), default="linear")
    p.add_argument("--a", type=float, default=0.3)
    p.add_argument("--b", type=float, default=0.2)
    p.add_argument("--c", type=float, default=1.0, help="softplus scale")
    p.add_argument("--d", type=float, default=0.0, help="log-linear intercept")
    p.add_argument("--z", type=float, default=0.5, help="constant covariate value")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ingarch-lab", description="Poisson INGARCH(1,1) lab: simulation, couplings, "
                     "mixing bounds and trend tests.")
    parser.add_argument("--version", action="version", version=__version__)
    _common(parser, suppress=False)
    parent = _Parser(add_help=False)
    _common(parent, suppress=True)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[parent], help="simulate one path (t,y,lambda,z)")
    _model_args(p)
    p.add_argument("--n", type=int, default=100, help="last time index")
    p.add_argument("--lam0", type=float, default=1.0)

    p = sub.add_parser("bound", parents=[parent], help="closed-form mixing bound table")
    p.add_argument("--model", choices=("linear", "softplus", "loglinear", "hybrid"), default="linear")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--ez", type=float, default=0.0, help="sup of the covariate mean")
    p.add_argument("--elam0", type=float, default=0.0, help="mean initial intensity")
    p.add_argument("--n-max", type=int, default=20)

    p = sub.add_parser("beta-estimate", parents=[parent], help="coupled-chain Monte Carlo estimate")
    _model_args(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--lam0", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=None)

    p = sub.add_parser("trend-test", parents=[parent], help="trend test on a count CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--seasonal-period", type=int, default=0, help="0 disables adjustment")
    p.add_argument("--date-col", default="date")
    p.add_argument("--count-col", default="count")
    p.add_argument("--allow-gaps", action="store_true", help="forward-fill missing days")

    p = sub.add_parser("power-study", parents=[parent], help="size/power Monte Carlo study")
    p.add_argument("--config", help="INI file with a [design] section")
    p.add_argument("--fast", action="store_true", help="500 replications per cell")
    p.add_argument("--reps", type=int, default=None)

    p = sub.add_parser("validate-couplings", parents=[parent], help="Monte Carlo coupling checks")
    p.add_argument("--reps", type=int, default=100_000)
    return parser


# ---------------------------------------------------------------------------


def _resolve_seed(args) -> int:
    if args.seed is None:
        args.seed = fresh_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _model_from_args(args) -> ModelSpec:
    if args.config:
        try:
            return load_model(args.config)
        except OSError as exc:
            raise DataError(f"cannot read {args.config}: {exc.strerror}") from None
    cov = CovariateSpec.constant(args.z)
    if args.model == "linear":
        return ModelSpec.linear(args.a, args.b, cov)
    if args.model == "softplus":
        return ModelSpec.softplus(args.a, args.b, args.c, cov)
    return ModelSpec.loglinear(args.d, args.a, args.b, cov)


def _csv(header, rows) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return fmt_float(v)
        return str(v)

    return "\n".join([",".join(header)] + [",".join(cell(v) for v in r) for r in rows]) + "\n"


def _json(doc: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **doc}, indent=2) + "\n"


def _table(kind: str, header, rows, fmt: str, **meta) -> str:
    if fmt == "json":
        return _json({"kind": kind, **meta, "rows": [dict(zip(header, r)) for r in rows]})
    return _csv(header, rows)


def cmd_simulate(args) -> str:
    seed = _resolve_seed(args)
    path = simulate_path(_model_from_args(args), args.n, args.lam0, seed)
    if args.format == "json":
        return _json({"kind": "path", "seed": seed, "model": path.model.describe(),
                      "y": path.y.tolist(), "lambda": path.lam.tolist(), "z": path.z.tolist()})
    return path.to_csv()


def cmd_bound(args) -> str:
    n_max = args.n_max
    if n_max < 1:
        raise ParameterError("--n-max must be >= 1")
    header = ("n", "raw_bound", "clamped")
    meta: dict = {"model": args.model, "a": args.a, "b": args.b}
    if args.model in ("linear", "softplus"):
        consts, M = corollary31_constants(args.a, args.b, args.ez, args.elam0)
        rows = [(n, theorem21_bound(consts, n), min(theorem21_bound(consts, n), 1.0))
                for n in range(1, n_max + 1)]
        meta.update(L1=consts.L1, L2=consts.L2, M=M, certified=True)
    elif args.model == "loglinear":
        rows = [(n, loglinear_rate(args.a, args.b, n).value,
                 min(loglinear_rate(args.a, args.b, n).value, 1.0)) for n in range(1, n_max + 1)]
        meta.update(certified=False, note=RATE_ONLY)
        print(RATE_ONLY, file=sys.stderr)
    else:
        opt = corollary32_optimize(args.a, args.b)
        rows = [(n, opt.rho**n, min(opt.rho**n, 1.0)) for n in range(1, n_max + 1)]
        meta.update(rho=opt.rho, eps=opt.eps, M=opt.M, certified=False, note=RATE_ONLY)
        print(f"rho={opt.rho!r} eps={opt.eps!r} M={opt.M!r}; {RATE_ONLY}", file=sys.stderr)
    return _table("bound", header, rows, args.format, **meta)


def cmd_beta_estimate(args) -> str:
    seed = _resolve_seed(args)
    model = _model_from_args(args)
    if not 1 <= args.n_min <= args.n_max:
        raise ParameterError("need 1 <= --n-min <= --n-max")
    ns = range(args.n_min, args.n_max + 1)
    consts = None
    if model.family in (Family.LINEAR, Family.SOFTPLUS):
        try:
            consts, _ = model_constants(model, args.lam0, horizon=args.k + args.n_max)
        except NoContractionError as exc:
            print(f"no closed-form bound: {exc}", file=sys.stderr)
    rows = []
    for n in ns:
        est = estimate_beta_upper(model, args.k, n, args.reps, args.horizon, seed, lam0=args.lam0,
                                  workers=args.workers)
        bound = theorem21_bound(consts, n) if consts is not None else None
        rows.append((n, est.estimate, est.se, bound))
    return _table("beta-estimate", ("n", "estimate", "se", "bound"), rows, args.format,
                  seed=seed, model=model.describe(), k=args.k, reps=args.reps)


def cmd_trend_test(args) -> str:
    series = load_counts_csv(args.input, args.date_col, args.count_col, args.allow_gaps)
    y = series.counts.astype(float)
    if args.seasonal_period:
        y = seasonal_adjust(y, args.seasonal_period).adjusted
    res = trend_test(y, args.alpha)
    doc = {"kind": "trend-test", "input": str(args.input), "label": series.label,
           "seasonal_period": args.seasonal_period, "filled": int(series.filled.sum()),
           **res.to_dict()}
    if args.format == "csv":
        keys = [k for k in doc if k not in ("flags",)]
        return _csv(keys, [[_scalar(doc[k]) for k in keys]])
    return _json({k: _jsonable(v) for k, v in doc.items()})


def _scalar(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    return v


def _jsonable(v):
    # JSON has no NaN; an undefined statistic is written as null
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def cmd_power_study(args) -> str:
    if args.config:
        try:
            design = McDesign.from_config(FsPath(args.config).read_text())
        except OSError as exc:
            raise DataError(f"cannot read {args.config}: {exc.strerror}") from None
    else:
        design = McDesign.default_study()
    reps = 500 if args.fast else args.reps
    seed = args.seed if args.seed is not None else (design.seed if args.config else _resolve_seed(args))
    design = McDesign(design.a_values, design.n_values, design.b0, design.b1_values, design.alpha,
                      design.reps if reps is None else reps, seed)
    report = run_power_study(design, workers=args.workers)
    print(f"wall time {report.wall_time:.1f} s", file=sys.stderr)
    invalid = sum(c.invalid for c in report.cells)
    if invalid:
        print(f"{invalid} replications with an undefined variance plug-in were excluded",
              file=sys.stderr)
    return report.to_json() if args.format == "json" else report.to_csv()


def cmd_validate_couplings(args) -> str:
    seed = _resolve_seed(args)
    report = run_coupling_validation(DEFAULT_COUPLING_GRID, args.reps, seed, args.workers)
    print("all cells pass" if report.passed else "FAILED cells present", file=sys.stderr)
    return report.to_json() if args.format == "json" else report.to_csv()


COMMANDS = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "beta-estimate": cmd_beta_estimate,
    "trend-test": cmd_trend_test,
    "power-study": cmd_power_study,
    "validate-couplings": cmd_validate_couplings,
}

DEFAULT_FORMAT = {"trend-test": "json"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage error, --help or --version
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("ingarch-lab: error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE
    if args.format is None:
        args.format = DEFAULT_FORMAT.get(args.command, "csv")
    if args.workers < 1:
        parser.print_usage(sys.stderr)
        print("ingarch-lab: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = COMMANDS[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NoContractionError, ExplosionError, DegenerateDesignError, InvalidStateError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (ParameterError, ValueError) as exc:
        print(f"ingarch-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
