"""Command-line interface: ``baequiv analyze | simulate | fixtures``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .data import FIXTURES, ColumnMap, load_fixture, parse_csv, transform
from .errors import AgreementError, ConfigError, DataError
from .figure import figure_for
from .report import analyze, render_report
from .simulate import SimulationConfig, format_table, simulate
from .structural import ALPHA

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="baequiv", description="Accuracy, precision and bisector-agreement analysis of paired measurements.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="run the three tests and the bootstrap graphics on one dataset")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="PATH", help="CSV file with a header row")
    src.add_argument("--fixture", metavar="NAME", help="bundled dataset (see the 'fixtures' command)")
    a.add_argument("--x-col", default=None, help="reference column(s), comma separated for replicates (default: x)")
    a.add_argument("--y-col", default=None, help="candidate column(s), comma separated for replicates (default: y)")
    a.add_argument("--id-col", default=None, help="subject id column (default: none)")
    a.add_argument("--alpha", type=float, default=ALPHA)
    a.add_argument("--boot", type=_positive_int, default=2000, help="bootstrap resamples (default: 2000)")
    a.add_argument("--grid", type=_positive_int, default=100, help="band grid points (default: 100)")
    a.add_argument("--seed", type=_seed, required=True, help="bootstrap seed (required)")
    a.add_argument("--lambda", dest="lambda_", type=float, default=None, metavar="VALUE", help="override the error-variance ratio")
    a.add_argument("--transform", action="append", default=[], metavar="T",
                   help="log | scale-y=c | scale-x=c; repeatable, applied in order")
    a.add_argument("--out", default=".", metavar="DIR", help="output directory (default: current)")
    a.add_argument("--format", choices=("json", "svg", "both"), default="both")
    a.add_argument("--workers", type=_positive_int, default=1, help="bootstrap worker threads (default: 1)")

    s = sub.add_parser("simulate", help="Monte-Carlo rejection rates under a structural model")
    s.add_argument("--n", type=_positive_int, default=50)
    s.add_argument("--reps", type=_positive_int, default=1000)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--bias", type=float, default=0.0)
    s.add_argument("--slope", type=float, default=1.0)
    s.add_argument("--lambda-true", type=float, default=1.0, help="true error-variance ratio candidate/reference")
    s.add_argument("--lambda-estimate", choices=("grubbs", "true"), default="grubbs")
    s.add_argument("--sd-true", type=float, default=10.0)
    s.add_argument("--sd-error", type=float, default=5.0)
    s.add_argument("--alpha", type=float, default=ALPHA)
    s.add_argument("--out", default=None, metavar="FILE", help="write the table here instead of standard output")

    sub.add_parser("fixtures", help="list the bundled datasets")
    return p


def _load(args):
    if args.fixture is not None:
        if args.x_col or args.y_col or args.id_col:
            raise ConfigError("bad-arguments", "--x-col/--y-col/--id-col apply only to --input")
        sample = load_fixture(args.fixture)
        info = FIXTURES[args.fixture]
        input_info = {"source": f"fixture:{args.fixture}", "provenance": info.provenance, "surrogate": info.surrogate}
    else:
        cols = ColumnMap.parse(args.x_col or "x", args.y_col or "y", args.id_col)
        path = Path(args.input)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise DataError("unreadable-input", f"{args.input}: {exc.strerror or exc}") from None
        sample = parse_csv(raw, cols, name=path.stem)
        input_info = {"source": f"file:{path.name}"}
    for t in args.transform:
        sample = transform(sample, t)
    if args.transform:
        input_info["transforms"] = list(args.transform)
    return sample, input_info


def _analyze(args) -> int:
    if not 0 < args.alpha < 1:
        raise ConfigError("bad-arguments", f"--alpha must lie in (0, 1), got {args.alpha}")
    if args.lambda_ is not None and not args.lambda_ > 0:
        raise ConfigError("bad-arguments", f"--lambda must be positive, got {args.lambda_}")
    sample, input_info = _load(args)
    result = analyze(sample, alpha=args.alpha, B=args.boot, grid_size=args.grid, seed=args.seed,
                     lambda_override=args.lambda_, workers=args.workers, input_info=input_info)
    out = Path(args.out)
    try:
        os.makedirs(out, exist_ok=True)
        if args.format in ("json", "both"):
            (out / "report.json").write_text(render_report(result.report), encoding="utf-8")
        if args.format in ("svg", "both"):
            (out / "figure.svg").write_text(figure_for(result), encoding="utf-8")
    except OSError as exc:
        raise ConfigError("unwritable-output", f"{out}: {exc.strerror or exc}") from None
    r = result.report
    print(f"{r.input['name']}: {r.verdict}"
          + (f" [{', '.join(r.annotations)}]" if r.annotations else ""))
    for w in r.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _simulate(args) -> int:
    cfg = SimulationConfig(n=args.n, reps=args.reps, seed=args.seed, bias=args.bias, slope=args.slope,
                           lambda_true=args.lambda_true, sd_true=args.sd_true, sd_error=args.sd_error,
                           alpha=args.alpha, lambda_estimate=args.lambda_estimate)
    table = format_table(simulate(cfg))
    if args.out:
        try:
            Path(args.out).write_text(table, encoding="utf-8")
        except OSError as exc:
            raise ConfigError("unwritable-output", f"{args.out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _fixtures(args) -> int:
    for name, info in FIXTURES.items():
        tag = " (simulated surrogate)" if info.surrogate else ""
        print(f"{name:<16}n={info.n:<4}{info.description}{tag}")
    return EXIT_OK


def run_cli(argv=None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = {"analyze": _analyze, "simulate": _simulate, "fixtures": _fixtures}[args.command]
    try:
        return handler(args)
    except AgreementError as exc:
        print(f"baequiv {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


def main():
    sys.exit(run_cli())
