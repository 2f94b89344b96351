"""Command-line front end.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
import warnings
from pathlib import Path

from . import __version__
from .config import ConfigError, load, thread_cap
from .dilation import GeneratorSpec, build_G, build_Lx, build_Ly, build_Lz, dilate
from .opalg import ExprSyntaxError, ExpressionBlowup, commutator, parse
from .report import VerificationReport, summarize
from .suites import SuiteError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _macros(n_particles: int, dims: int) -> dict:
    spec = GeneratorSpec(n_particles, dims)
    out = {"G": build_G(spec)}
    if dims == 3:
        out.update(Lx=build_Lx(spec), Ly=build_Ly(spec), Lz=build_Lz(spec))
    return out


def _parse(text: str, args) -> object:
    if args.particles is not None and args.particles < 1:
        raise UsageError("--particles must be >= 1")
    try:
        return parse(text, n_particles=args.particles, macros=_macros(args.particles or 1, args.dims))
    except ExprSyntaxError as exc:
        raise UsageError(f"syntax error in {text!r}: {exc}") from None
    except IndexError as exc:
        raise UsageError(f"index error in {text!r}: {exc}") from None


def cmd_commute(args) -> int:
    print(commutator(_parse(args.a, args), _parse(args.b, args)))
    return EXIT_OK


def cmd_dilate(args) -> int:
    print(dilate(_parse(args.expr, args)))
    return EXIT_OK


def cmd_run(args) -> int:
    from .suites import run_suites

    cfg = load(args.config)
    threads = thread_cap()
    out_cfg = cfg.get("output", {})
    csv_dir = args.csv_dir or out_cfg.get("csv_dir")
    if csv_dir:
        csv_dir = Path(csv_dir)
        csv_dir.mkdir(parents=True, exist_ok=True)
    records = run_suites(cfg, threads=threads, csv_dir=csv_dir)
    report = VerificationReport(records, cfg)
    text = report.to_json(with_timestamp=not args.no_timestamp)
    target = args.output or out_cfg.get("report")
    if target:
        Path(target).write_text(text)
    else:
        sys.stdout.write(text)
    if not args.quiet:
        for line in summarize(report.to_dict()):
            print(line, file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_report(args) -> int:
    try:
        data = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from None
    if not isinstance(data, dict) or "checks" not in data:
        raise UsageError(f"{args.report} is not a verification report")
    for line in summarize(data):
        print(line)
    return EXIT_OK if all(c.get("pass") for c in data["checks"]) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="virial-lab", description="Virial theorem verification laboratory.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the verification suites of a config file")
    run.add_argument("config")
    run.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    run.add_argument("--csv-dir", help="directory for trajectory and eigenvalue tables")
    run.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    run.add_argument("-q", "--quiet", action="store_true", help="no summary on stderr")
    run.set_defaults(func=cmd_run)

    for name, helptext in (("commute", "print the normal-ordered commutator [a, b]"), ("dilate", "print the dilated expression")):
        p = sub.add_parser(name, help=helptext)
        if name == "commute":
            p.add_argument("a")
            p.add_argument("b")
            p.set_defaults(func=cmd_commute)
        else:
            p.add_argument("expr")
            p.set_defaults(func=cmd_dilate)
        p.add_argument(
            "--particles",
            type=int,
            default=None,
            help="particle count for the G/L macros (default 1); when given, larger indices are rejected",
        )
        p.add_argument("--dims", type=int, choices=(1, 3), default=3, help="dimension for the G/L macros (default 3)")

    rep = sub.add_parser("report", help="summarise a saved report")
    rep.add_argument("--summarize", dest="report", required=True, metavar="REPORT_JSON")
    rep.set_defaults(func=cmd_report)
    return ap


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


def main(argv=None) -> int:
    previous = warnings.showwarning
    warnings.showwarning = _show_warning
    try:
        return _main(argv)
    finally:
        warnings.showwarning = previous


def _main(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExpressionBlowup as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SuiteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
