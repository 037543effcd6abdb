"""Command line entry point: ``agcomp run spec.json`` and ``agcomp emit report.json``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .harness import Report, emit_table, load_spec, run_campaign


def _run(args) -> int:
    spec = load_spec(args.spec)
    report = run_campaign(spec)
    out = args.output or spec.output
    text = emit_table(report, "json", out)
    if out is None:
        sys.stdout.write(text)
    s = report.summary
    print(f"{spec.kind}: {s['passed']} passed, {s['failed']} failed, worst margin {s['worst_margin']}"
          f" ({report.wall_time:.2f} s)", file=sys.stderr)
    return 0 if report.ok else 1


def _emit(args) -> int:
    with open(args.report) as fh:
        report = Report.from_dict(json.load(fh))
    text = emit_table(report, args.format, args.output)
    if args.output is None:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="agcomp", description="Run excess-bound verification campaigns.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a campaign spec and write its JSON report")
    r.add_argument("spec")
    r.add_argument("-o", "--output", help="report path (default: the spec's output field, else stdout)")
    r.set_defaults(func=_run)
    e = sub.add_parser("emit", help="convert a report to a table")
    e.add_argument("report")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("-o", "--output")
    e.set_defaults(func=_emit)
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error in {exc.field}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
