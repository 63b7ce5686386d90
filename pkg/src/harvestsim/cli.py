"""Command line interface.

Commands:
    run        simulate a scenario and emit the CSV time series
    validate   parse and validate a scenario config
    trace-info summarize a harvest trace file

Exit codes: 0 success, 2 config error, 3 trace error, 4 I/O error. The
HARVESTSIM_LOG environment variable sets the log level (debug, info, ...).
Bundled scenarios may be referenced by bare name, e.g. ``run --config fig2``.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from .scenario import (
    BUNDLED_SCENARIOS,
    ConfigError,
    bundled_scenario_path,
    emit_csv,
    load_config,
    run_scenario,
)
from .tracefile import TraceError, trace_info

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_IO = 4


def _configure_logging() -> None:
    level_name = os.environ.get("HARVESTSIM_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _resolve_config(value: str) -> Path:
    path = Path(value)
    if not path.exists() and value in BUNDLED_SCENARIOS:
        return bundled_scenario_path(value)
    return path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harvestsim",
        description="Discrete-event simulator for energy-harvesting wireless nodes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and emit CSV")
    run_p.add_argument("--config", required=True,
                       help=f"config path or bundled name ({', '.join(BUNDLED_SCENARIOS)})")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario's master seed")
    run_p.add_argument("--out", default=None,
                       help="output CSV path (default: stdout)")
    run_p.add_argument("--runs", type=int, default=1,
                       help="run N independent seeds (seed, seed+1, ...); requires --out")

    val_p = sub.add_parser("validate", help="validate a scenario config")
    val_p.add_argument("--config", required=True,
                       help="config path or bundled name")

    info_p = sub.add_parser("trace-info", help="summarize a harvest trace file")
    info_p.add_argument("path", help="trace CSV path")

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.runs > 1 and args.out is None:
        print("error: --runs > 1 requires --out", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    scenario = load_config(_resolve_config(args.config))
    base_seed = scenario.master_seed if args.seed is None else args.seed
    for index in range(args.runs):
        seed = base_seed + index
        result = run_scenario(scenario, seed_override=seed)
        if args.out is None:
            emit_csv(result.rows, sys.stdout)
        else:
            out = Path(args.out)
            if args.runs > 1:
                out = out.with_name(f"{out.stem}_run{index:03d}{out.suffix}")
            emit_csv(result.rows, out)
            log.info("wrote %d rows to %s (seed %d)", len(result.rows), out, seed)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    path = _resolve_config(args.config)
    scenario = load_config(path)
    n_sched = sum(1 for d in scenario.devices if d.schedule is not None)
    print(f"OK: {path}")
    print(f"  name: {scenario.name}")
    print(f"  duration_s: {scenario.duration_s}")
    print(f"  source: {type(scenario.source).__name__}")
    print(f"  devices: {len(scenario.devices)} ({n_sched} scheduled)")
    print(f"  harvester: {type(scenario.harvester).__name__ if scenario.harvester else 'none'}")
    print(f"  predictor: {'yes' if scenario.predictor else 'none'}")
    return EXIT_OK


def _cmd_trace_info(args: argparse.Namespace) -> int:
    try:
        info = trace_info(args.path)
    except OSError as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_TRACE
    print(f"trace: {info.path}")
    print(f"  samples: {info.sample_count}")
    print(f"  duration_s: {info.duration_s}")
    print(f"  min_power_w: {info.min_power_w}")
    print(f"  max_power_w: {info.max_power_w}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "trace-info":
            return _cmd_trace_info(args)
        raise AssertionError(f"unhandled command {args.command!r}")
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
