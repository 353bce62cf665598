"""Command-line interface.

Commands:

* ``camlqr run <config.json>`` — execute a scenario config end to end.
* ``camlqr validate <config.json>`` — parse and check a config, no execution.
* ``camlqr benchmark`` — run the two built-in scenarios and print a summary
  table of learned-versus-reference metrics.

Exit codes: 0 on success, 2 for configuration problems, 3 for model or
numerical failures during a run.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .errors import CamlqrError, ConfigError
from .scenario import (
    BUILTIN_SCENARIOS,
    builtin_config,
    parse_config,
    run_scenario,
    validate_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camlqr",
        description="Learning-based LQR with covert-attack modeling, "
                    "camouflaged exploration, and residual detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario config")
    run_p.add_argument("config", help="path to a scenario JSON config")
    run_p.add_argument("--out-dir", default=None,
                       help="override the output directory")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the exploration seed")
    run_p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")

    val_p = sub.add_parser("validate", help="check a config without running")
    val_p.add_argument("config", help="path to a scenario JSON config")

    bench_p = sub.add_parser(
        "benchmark", help="run the built-in scenarios and summarize")
    bench_p.add_argument("--out-dir", default=None,
                         help="parent directory for benchmark outputs")
    bench_p.add_argument("--seed", type=int, default=None,
                         help="override the exploration seed")
    bench_p.add_argument("--no-plots", action="store_true",
                         help="skip figure rendering")
    return parser


def _print_report_summary(report, elapsed: float) -> None:
    print(f"scenario {report.name!r} finished in {elapsed:.2f} s "
          f"(seed {report.seed})")
    print(f"  output directory : {report.out_dir}")
    if report.rank is not None:
        print(f"  excitation rank  : {report.rank['achieved']} "
              f"(required {report.rank['required']}, "
              f"satisfied={report.rank['satisfied']})")
    if report.learner_summary is not None:
        ls = report.learner_summary
        print(f"  learner          : mode={ls['mode']} "
              f"iterations={ls['iterations']} "
              f"final_update={ls['final_update_norm']:.3e}")
    if report.oracle_gap_rel is not None:
        print(f"  gain vs oracle   : relative gap {report.oracle_gap_rel:.3e}")
    if report.eavesdrop is not None:
        if "error" in report.eavesdrop:
            print(f"  eavesdropper     : failed ({report.eavesdrop['error']})")
        else:
            print(f"  eavesdropper     : rel_err_A="
                  f"{report.eavesdrop['rel_err_A']:.3e} "
                  f"rel_err_B={report.eavesdrop['rel_err_B']:.3e}")
    if report.attack is not None:
        at = report.attack
        alarm = ("none" if at["alarm_time"] is None
                 else f"{at['alarm_time']:.2f} s")
        print(f"  attack           : onset={at['onset']:.2f} s "
              f"({at['identification']}), covertness_sup="
              f"{at['covertness_sup']:.3e}, alarm={alarm}")
    if report.costs is not None and "J_attacked" in report.costs:
        print(f"  cost             : attacked={report.costs['J_attacked']:.4f} "
              f"unattacked={report.costs['J_unattacked']:.4f}")
    for warning in report.warnings:
        print(f"  warning          : {warning}")


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    start = time.perf_counter()
    report = run_scenario(config, out_dir=args.out_dir, seed=args.seed,
                          render_plots=not args.no_plots)
    _print_report_summary(report, time.perf_counter() - start)
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = parse_config(args.config)
    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(f"invalid: {problem}")
        return EXIT_CONFIG
    print(f"config {args.config} is valid "
          f"(scenario {config.data['name']!r})")
    print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    import os

    rows = []
    for name in BUILTIN_SCENARIOS:
        out_dir = (os.path.join(args.out_dir, name)
                   if args.out_dir is not None else None)
        config = (builtin_config(name, out_dir=out_dir)
                  if args.seed is None
                  else builtin_config(name, out_dir=out_dir, seed=args.seed))
        start = time.perf_counter()
        report = run_scenario(config, render_plots=not args.no_plots)
        elapsed = time.perf_counter() - start
        _print_report_summary(report, elapsed)
        print()
        at = report.attack or {}
        rows.append({
            "scenario": name,
            "gain_gap": report.oracle_gap_rel,
            "iterations": report.learner_summary["iterations"],
            "covertness": at.get("covertness_sup"),
            "alarm": at.get("alarm_time"),
            "J_attacked": (report.costs or {}).get("J_attacked"),
            "J_unattacked": (report.costs or {}).get("J_unattacked"),
            "seconds": elapsed,
        })

    def _fmt(value, spec):
        return "-" if value is None else format(value, spec)

    header = (f"{'scenario':<16} {'gain_gap':>10} {'iters':>5} "
              f"{'covertness':>11} {'alarm[s]':>8} {'J_att':>10} "
              f"{'J_free':>10} {'time[s]':>7}")
    print(header)
    print("-" * len(header))
    for row in rows:
        print(f"{row['scenario']:<16} {_fmt(row['gain_gap'], '.3e'):>10} "
              f"{row['iterations']:>5d} {_fmt(row['covertness'], '.3e'):>11} "
              f"{_fmt(row['alarm'], '.2f'):>8} "
              f"{_fmt(row['J_attacked'], '.3f'):>10} "
              f"{_fmt(row['J_unattacked'], '.3f'):>10} "
              f"{row['seconds']:>7.2f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "benchmark":
            return _cmd_benchmark(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CamlqrError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
