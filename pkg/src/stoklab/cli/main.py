"""``stoklab list`` and ``stoklab run``.

Exit status: 0 when every row passes, 1 when a row fails or the computation
raises, 2 on a usage error (bad command line, unknown experiment or key).
"""

from __future__ import annotations

import argparse
import sys
import time

from .. import _backend
from ..errors import StoklabError
from .experiments import REGISTRY, list_experiments
from .report import Report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_overrides(name: str, items: list[str]) -> dict:
    """Merge ``key=value`` strings into the experiment defaults, typed like the defaults."""
    if name not in REGISTRY:
        raise UsageError(f"unknown experiment {name!r}; see 'stoklab list'")
    params = dict(REGISTRY[name].defaults)
    for item in items:
        key, sep, text = item.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        if key not in params:
            raise UsageError(f"unknown parameter {key!r} for {name}; known: {', '.join(sorted(params))}")
        kind = type(params[key])
        try:
            if kind is bool:
                params[key] = _parse_bool(text)
            elif kind is int:
                params[key] = int(text)
            elif kind is float:
                params[key] = float(text)
            else:
                params[key] = text
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
    return params


def run_experiment(name: str, seed: int = 1, overrides: list[str] | None = None, timing: bool = False) -> Report:
    """Run one experiment; a numeric failure ends the report early with ``error`` set."""
    params = parse_overrides(name, overrides or [])
    report = Report(name, seed, params)
    rows = REGISTRY[name].run(params, seed)
    start = time.perf_counter()
    try:
        for row in rows:
            now = time.perf_counter()
            report.add(row, now - start if timing else 0.0)
            start = now
    except StoklabError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stoklab", description="Reproducible stochastic-calculus experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments")
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("experiment")
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--out", default=None, help="write the report here instead of stdout")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--threads", type=int, default=None, help="worker threads (wall time only)")
    run.add_argument("--timing", action="store_true", help="fill the seconds column (reports stop being byte-stable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    if args.command == "list":
        for name, desc in list_experiments():
            print(f"{name}\t{desc}")
        return EXIT_OK

    if args.threads is not None:
        if args.threads < 1:
            print("stoklab: --threads must be positive", file=sys.stderr)
            return EXIT_USAGE
        _backend.set_threads(args.threads)
    try:
        parse_overrides(args.experiment, args.overrides)
    except UsageError as exc:
        print(f"stoklab: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = run_experiment(args.experiment, args.seed, args.overrides, args.timing)
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if report.error:
        print(f"stoklab: {report.error}", file=sys.stderr)
    return EXIT_OK if report.all_passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
