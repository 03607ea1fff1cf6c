"""Command line driver.

Exit codes: 0 no violation, 2 at least one monitor violated, 1 configuration,
wiring or input error.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

from .behavior_tree import BTParseError, load_bt
from .bus import read_trace
from .monitor import MonitorSpecError, check_messages, load_monitor
from .plotting import trace_svg
from .scenario import Injection, ScenarioError, describe_scenario, load_config, run_scenario
from .sim.grid import MapError, load_map
from .skills import SkillError, load_skill_manifest
from .statechart import ChartParseError, load_scxml

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

TRACE = 5
logging.addLevelName(TRACE, "TRACE")
_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
           "debug": logging.DEBUG, "trace": TRACE}

# short names accepted by --inject skill-bug:<alias>-<variable>=<value>
SKILL_ALIASES = {"battery30": "BatteryLevelAbove30"}

log = logging.getLogger("btverify")


def configure_logging() -> None:
    name = os.environ.get("BTVERIFY_LOG_LEVEL", "warn").lower()
    level = _LEVELS.get(name)
    if level is None:
        print(f"btverify: ignoring BTVERIFY_LOG_LEVEL={name!r}", file=sys.stderr)
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


_INJECT = re.compile(r"^(?P<kind>[a-z-]+)(?::(?P<arg>[^@]+))?(?:@(?P<tick>\d+))?$")


def parse_injection(text: str) -> Injection:
    """Parse an ``--inject`` value.

    Forms: ``set-battery:10@200`` (also ``set-battery:level=10@200``),
    ``skill-bug:battery30-threshold=20[@tick]`` and ``plug-cable@tick``.
    The tick defaults to 0.
    """
    m = _INJECT.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse injection {text!r}")
    kind, arg, tick = m.group("kind"), m.group("arg"), int(m.group("tick") or 0)
    if kind == "set-battery":
        if arg is None:
            raise ValueError("set-battery needs a level, e.g. set-battery:10@200")
        value = arg.split("=", 1)[1] if "=" in arg else arg
        return Injection("set_battery", tick=tick, level=float(value))
    if kind == "skill-bug":
        if arg is None or "=" not in arg or "-" not in arg.split("=", 1)[0]:
            raise ValueError("skill-bug needs <skill>-<variable>=<value>, e.g. skill-bug:battery30-threshold=20")
        target, value = arg.split("=", 1)
        skill, variable = target.rsplit("-", 1)
        return Injection("enable_skill_bug", tick=tick, threshold=float(value),
                         skill=SKILL_ALIASES.get(skill, skill), variable=variable)
    if kind == "plug-cable":
        return Injection("plug_cable", tick=tick)
    raise ValueError(f"unknown injection kind {kind!r}")


def _emit_verdicts(verdicts) -> None:
    for v in verdicts:
        print(v.to_json())


def cmd_run(args) -> int:
    try:
        injections = [parse_injection(s) for s in args.inject]
        config = load_config(args.config)
        log_dir = Path(args.log_dir) if args.log_dir else Path("btverify-logs") / config.name
        report = run_scenario(config, deterministic=args.deterministic, log_dir=log_dir,
                              max_ticks=args.ticks, extra_injections=injections)
    except (ScenarioError, FileNotFoundError, ValueError, BTParseError, ChartParseError,
            MapError, MonitorSpecError, SkillError) as exc:
        print(f"btverify run: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(report.summary())
    print(f"trace: {report.trace_path}")
    return EXIT_VIOLATION if report.violated else EXIT_OK


def cmd_check(args) -> int:
    try:
        specs = [load_monitor(p) for p in args.monitor]
        with open(args.trace, encoding="utf-8") as fh:
            verdicts = check_messages(read_trace(fh), specs)
    except (FileNotFoundError, ValueError, ChartParseError, MonitorSpecError) as exc:
        print(f"btverify check: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit_verdicts(verdicts)
    return EXIT_VIOLATION if verdicts else EXIT_OK


def cmd_validate(args) -> int:
    checks = [(load_bt, p) for p in args.bt] + [(load_scxml, p) for p in args.scxml] + \
             [(load_map, p) for p in args.map] + [(load_monitor, p) for p in args.monitor] + \
             [(load_skill_manifest, p) for p in args.skills] + [(load_config, p) for p in args.config]
    if not checks:
        print("btverify validate: nothing to validate", file=sys.stderr)
        return EXIT_ERROR
    status = EXIT_OK
    for loader, path in checks:
        try:
            loader(path)
        except (BTParseError, ChartParseError, MapError, MonitorSpecError, SkillError,
                ScenarioError, FileNotFoundError, ValueError, KeyError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = EXIT_ERROR
        else:
            print(f"{path}: ok")
    return status


def cmd_plot(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            messages = list(read_trace(fh))
        grid = load_map(args.map) if args.map else None
    except (FileNotFoundError, ValueError, MapError) as exc:
        print(f"btverify plot: {exc}", file=sys.stderr)
        return EXIT_ERROR
    Path(args.out).write_text(trace_svg(messages, grid))
    print(args.out)
    return EXIT_OK


def cmd_describe(args) -> int:
    try:
        sys.stdout.write(describe_scenario(args.config))
    except (ScenarioError, FileNotFoundError, ValueError, BTParseError, ChartParseError,
            MapError, MonitorSpecError, SkillError) as exc:
        print(f"btverify describe: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btverify", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("--config", required=True)
    run.add_argument("--inject", action="append", default=[], metavar="SPEC",
                     help="extra fault injection, e.g. set-battery:10@200 or skill-bug:battery30-threshold=20")
    run.add_argument("--log-dir", help="where trace.jsonl, verdicts.jsonl and report.txt go")
    run.add_argument("--deterministic", action="store_true",
                     help="single-threaded lockstep execution (default: threaded endpoints and monitors)")
    run.add_argument("--ticks", type=int, help="override the tick limit")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="replay a trace through monitors")
    check.add_argument("--trace", required=True)
    check.add_argument("--monitor", action="append", required=True)
    check.set_defaults(func=cmd_check)

    validate = sub.add_parser("validate", help="parse fixture files")
    for flag in ("bt", "scxml", "map", "monitor", "skills", "config"):
        validate.add_argument(f"--{flag}", action="append", default=[])
    validate.set_defaults(func=cmd_validate)

    plot = sub.add_parser("plot", help="render a trace as SVG")
    plot.add_argument("--trace", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--map", help="map file to draw under the path")
    plot.set_defaults(func=cmd_plot)

    describe = sub.add_parser("describe", help="print the wiring of a scenario")
    describe.add_argument("--config", required=True)
    describe.set_defaults(func=cmd_describe)
    return parser


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
