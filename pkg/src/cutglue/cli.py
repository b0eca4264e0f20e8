"""Batch front-end: run verification suites from a config, write reports.

Exit status: 0 when every selected check passes, 1 on a numerical failure,
2 on a configuration problem.  Report files are byte-stable across reruns.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .reports import Report
from .suites import SUITES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutglue",
        description="verification suites for cutoff regularization and "
                    "gluing on discretized manifolds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run suites from a config file")
    run.add_argument("config", help="path to a JSON scenario config")
    run.add_argument("--suite", action="append", default=None,
                     help="run only this suite (repeatable)")
    run.add_argument("--out-dir", default="reports",
                     help="directory for CSV/JSON report files")
    run.add_argument("--max-order", type=float, default=None,
                     help="override the series truncation order")
    run.add_argument("--seed", type=int, default=0,
                     help="seed for randomized property trials")
    run.add_argument("--jobs", type=int, default=1,
                     help="worker count (suites are cheap; kept serial for "
                          "byte-stable reports)")

    sub.add_parser("list-suites", help="list available suites")
    return parser


def list_suites(stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    for name in sorted(SUITES):
        description, _ = SUITES[name]
        stream.write(f"{name}: {description}\n")
    return EXIT_OK


def run(args) -> int:
    try:
        cfg = load_config(args.config, SUITES)
        if args.max_order is not None:
            from dataclasses import replace
            if round(2 * args.max_order) != 2 * args.max_order or args.max_order < 0:
                raise ConfigError("max_order must be a nonnegative half-integer")
            cfg = replace(cfg, max_order=float(args.max_order))
        selected = cfg.suites
        if args.suite:
            unknown = [s for s in args.suite if s not in SUITES]
            if unknown:
                raise ConfigError(f"unknown suites: {unknown}")
            selected = tuple(args.suite)
        if args.jobs < 1:
            raise ConfigError("jobs must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out_dir, exist_ok=True)
    all_passed = True
    summary = Report(cfg.name)
    for name in selected:
        _, runner = SUITES[name]
        report = runner(cfg, args.seed)
        base = os.path.join(args.out_dir, f"{cfg.name}-{name}")
        with open(base + ".csv", "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        with open(base + ".json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        summary.extend(report.checks)
        status = "pass" if report.passed else "FAIL"
        print(f"{name}: {status} (max residual {report.max_residual:.3e}, "
              f"{len(report.checks)} checks)")
        if not report.passed:
            all_passed = False
            for c in report.checks:
                if not c.passed:
                    print(f"  failed: {c.name} residual {c.residual:.3e} "
                          f"tolerance {c.tolerance:.3e}", file=sys.stderr)
    with open(os.path.join(args.out_dir, f"{cfg.name}-summary.json"),
              "w", encoding="utf-8") as fh:
        fh.write(summary.to_json())
    return EXIT_OK if all_passed else EXIT_NUMERICAL


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    args = build_parser().parse_args(argv)
    if args.command == "list-suites":
        return list_suites()
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
