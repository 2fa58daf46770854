"""Command line entry point: ``decobath run | verify | sweep``.

Exit codes: 0 success, 1 failed verification, 2 invalid configuration,
3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from .errors import ConfigError, NumericalError

EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be a comma-separated list of numbers: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decobath", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration and write series + summary")
    p.add_argument("--config", required=True, help="path to the JSON run config")

    p = sub.add_parser("verify", help="run a built-in invariant suite")
    p.add_argument("--suite", required=True, help=f"one of {', '.join(runner.SUITES)}")

    p = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help=f"one of {', '.join(runner.SWEEP_PARAMS)}")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--table", default=None, help="write the summary table here instead of stdout")
    return ap


def _cmd_run(args) -> int:
    cfg = runner.RunConfig.load(args.config)
    result = runner.run(cfg)
    if not cfg.summary_path:
        print(json.dumps(result.summary, indent=2))
    if not cfg.series_path:
        sys.stdout.write(result.csv_text())
    for w in result.summary["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    checks = runner.verify(args.suite)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else EXIT_VERIFY_FAILED


def _cmd_sweep(args) -> int:
    cfg = runner.RunConfig.load(args.config)
    results = runner.sweep(cfg, args.param, _parse_values(args.values))
    table = runner.sweep_table(args.param, results)
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "verify": _cmd_verify, "sweep": _cmd_sweep}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
