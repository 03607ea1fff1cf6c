"""Wiring and lockstep execution of the recharge scenario.

One scenario tick is: apply due injections and operator actions, tick the
behavior tree once (skills query the service endpoints over the bus), then
advance the world by one step. The bus clock reads the tick index, so every
trace timestamp is a tick number.
"""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .behavior_tree import BehaviorTreeEngine, BTNode, NodeKind, TickStatus, TickTrace, load_bt
from .bus import Bus, Message, TraceWriter
from .expressions import Expression, mapping_lookup
from .monitor import MonitorInstance, MonitorSpec, Verdict, load_monitor, write_verdicts
from .sim import BATTERY, INJECTOR, OPERATOR, BatteryState, World, load_map, register_services
from .skills import BusLeafExecutor, SkillHost, load_skill_manifest

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

ACTIONS = ("set_battery", "enable_skill_bug", "plug_cable")


class ScenarioError(RuntimeError):
    """Configuration or wiring problem detected before the first tick."""


@dataclass
class Injection:
    action: str
    tick: Optional[int] = None
    when: Optional[str] = None
    level: Optional[float] = None
    threshold: Optional[float] = None
    skill: str = "BatteryLevelAbove30"
    variable: str = "threshold"

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ScenarioError(f"unknown injection action {self.action!r}; expected one of {ACTIONS}")
        if (self.tick is None) == (self.when is None):
            raise ScenarioError(f"injection {self.action!r} needs exactly one of 'tick' or 'when'")
        if self.tick is not None and self.tick < 0:
            raise ScenarioError("injection tick must be >= 0")
        if self.action == "set_battery" and self.level is None:
            raise ScenarioError("set_battery needs 'level'")
        if self.action == "enable_skill_bug" and self.threshold is None:
            raise ScenarioError("enable_skill_bug needs 'threshold'")
        self._trigger = Expression(self.when) if self.when is not None else None

    def due(self, tick: int, observables: dict) -> bool:
        if self.tick is not None:
            return tick == self.tick
        return bool(self._trigger.evaluate(mapping_lookup(observables)))

    def describe(self) -> str:
        when = f"tick {self.tick}" if self.tick is not None else f"when {self.when}"
        arg = {"set_battery": f"({self.level})", "enable_skill_bug": f"({self.threshold})"}.get(self.action, "")
        return f"{self.action}{arg} at {when}"


@dataclass
class ScenarioConfig:
    map: Path
    bt: Path
    skills: Path
    monitors: list[Path] = field(default_factory=list)
    monitor_parameters: dict = field(default_factory=dict)
    injections: list[Injection] = field(default_factory=list)
    frequency: float = 10.0
    seed: int = 0
    name: str = "scenario"
    max_ticks: int = 2000
    stop_on_root_success: bool = True
    stop_on_violation: bool = False
    battery: float = 100.0
    drain_rate: float = 0.2
    charge_rate: float = 1.0
    speed: float = 0.2
    inflation: int = 1
    start: str = "start"
    plug_delay: Optional[int] = 20  # None disables the operator

    def validate(self) -> None:
        for label, path in [("map", self.map), ("bt", self.bt), ("skills", self.skills)] + \
                [("monitor", p) for p in self.monitors]:
            if not Path(path).exists():
                raise ScenarioError(f"{label} file not found: {path}")
        if self.frequency <= 0:
            raise ScenarioError("frequency must be positive")
        if self.max_ticks <= 0:
            raise ScenarioError("max_ticks must be positive")


def load_config(path) -> ScenarioConfig:
    """Read a TOML scenario; relative file paths resolve against its directory."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    base = path.parent

    def p(key):
        if key not in data:
            raise ScenarioError(f"{path}: missing {key!r}")
        return (base / data[key]).resolve()

    world = data.get("world", {})
    stop = data.get("stop", {})
    operator = data.get("operator", {})
    try:
        injections = [Injection(**entry) for entry in data.get("injections", [])]
    except TypeError as exc:
        raise ScenarioError(f"{path}: bad injection ({exc})") from None
    cfg = ScenarioConfig(
        map=p("map"), bt=p("bt"), skills=p("skills"),
        monitors=[(base / m).resolve() for m in data.get("monitors", [])],
        monitor_parameters=data.get("monitor_parameters", {}),
        injections=injections,
        frequency=float(data.get("frequency", 10.0)),
        seed=int(data.get("seed", 0)),
        name=str(data.get("name", path.stem)),
        max_ticks=int(stop.get("max_ticks", 2000)),
        stop_on_root_success=bool(stop.get("on_root_success", True)),
        stop_on_violation=bool(stop.get("on_violation", False)),
        battery=float(world.get("battery", 100.0)),
        drain_rate=float(world.get("drain_rate", 0.2)),
        charge_rate=float(world.get("charge_rate", 1.0)),
        speed=float(world.get("speed", 0.2)),
        inflation=int(world.get("inflation", 1)),
        start=str(world.get("start", "start")),
        plug_delay=operator.get("plug_delay", 20) if operator.get("enabled", True) else None,
    )
    cfg.validate()
    return cfg


@dataclass
class RunReport:
    name: str
    verdicts: list[Verdict]
    final_world: dict
    ticks: int
    root_status: Optional[TickStatus]
    trace_path: Optional[Path]
    messages: list[Message]
    world_series: list[dict]
    monitor_states: dict[str, list[str]]
    bt_trace: TickTrace

    @property
    def violated(self) -> bool:
        return bool(self.verdicts)

    def summary(self) -> str:
        w = self.final_world
        lines = [
            f"scenario: {self.name}",
            f"ticks: {self.ticks}",
            f"root status: {self.root_status}",
            f"robot: x={w['robot']['x']:.2f} y={w['robot']['y']:.2f} nav={w['nav']['status']}"
            f" goal={w['nav']['goal'] or '-'}",
            f"battery: {w['battery']['level']:.2f}% charging={w['battery']['charging']}",
            f"messages: {len(self.messages)}",
            f"violations: {len(self.verdicts)}",
        ]
        for v in self.verdicts:
            lines.append(f"  {v.monitor}: state {v.state!r} at tick {v.t} "
                         f"({v.witness.connection} {v.witness.direction.value} {v.witness.procedure} "
                         f"{json.dumps(v.witness.payload, sort_keys=True)})")
        return "\n".join(lines) + "\n"


class Scenario:
    """All wired components for one run."""

    def __init__(self, config: ScenarioConfig, deterministic: bool = True, attach_monitors: bool = True):
        config.validate()
        self.config = config
        self.tick_index = 0
        self.grid = load_map(config.map)
        if config.start not in self.grid.named_locations:
            raise ScenarioError(f"map has no start location {config.start!r}")
        self.world = World(self.grid, self.grid.named_locations[config.start],
                           BatteryState(config.battery, False, config.drain_rate, config.charge_rate),
                           speed=config.speed, inflation=config.inflation)
        self.bus = Bus(deterministic=deterministic, clock=lambda: self.tick_index)
        register_services(self.bus, self.world)
        self.skills = load_skill_manifest(config.skills, self.grid.named_locations)
        self.tree: BTNode = load_bt(config.bt)
        self._check_wiring()
        self.host = SkillHost(self.bus, self.skills)
        self.engine = BehaviorTreeEngine(self.tree, BusLeafExecutor(self.bus))
        self.monitor_specs: list[MonitorSpec] = [
            load_monitor(p, config.monitor_parameters.get(Path(p).stem)) for p in config.monitors]
        self.monitors = [MonitorInstance(s) for s in self.monitor_specs] if attach_monitors else []
        self.verdicts: list[Verdict] = []
        self.messages: list[Message] = []
        self.bus.add_tap(self.messages.append)
        for m in self.monitors:
            self.bus.attach_portmonitor(m.spec.patterns, self._monitor_sink(m))
        self._fired: set[int] = set()
        self._at_station_for = 0

    def _check_wiring(self) -> None:
        for leaf in self.tree.leaves():
            skill = self.skills.get(leaf.id)
            if skill is None:
                raise ScenarioError(f"BT leaf {leaf.id!r} has no skill in {self.config.skills}")
            if skill.kind is not leaf.kind:
                raise ScenarioError(f"BT leaf {leaf.id!r} is a {leaf.kind.value} "
                                    f"but its skill is a {skill.kind.value}")
        for inj in self.config.injections:
            if inj.action == "enable_skill_bug":
                skill = self.skills.get(inj.skill)
                if skill is None or inj.variable not in skill.chart.variables:
                    raise ScenarioError(f"skill bug targets unknown {inj.skill}.{inj.variable}")

    def _monitor_sink(self, monitor: MonitorInstance):
        def sink(message: Message):
            verdict = monitor.feed(message)
            if verdict is not None:
                self.verdicts.append(verdict)
                log.warning("monitor %s violated at tick %s", verdict.monitor, verdict.t)
        return sink

    # -- per-tick actions ------------------------------------------------------

    def _apply(self, inj: Injection) -> None:
        log.info("injecting %s", inj.describe())
        if inj.action == "set_battery":
            self.bus.query(INJECTOR, BATTERY, "set_level", {"level": inj.level})
        elif inj.action == "plug_cable":
            self.bus.query(OPERATOR, BATTERY, "plug_cable")
        else:
            self.host.override(inj.skill, **{inj.variable: inj.threshold})

    def _operator(self) -> None:
        delay = self.config.plug_delay
        if delay is None:
            return
        w = self.world
        waiting = w.at_station() and not w.battery.charging and w.nav.status != "navigating" \
            and w.battery.level < 100.0
        self._at_station_for = self._at_station_for + 1 if waiting else 0
        if waiting and self._at_station_for > delay:
            self.bus.query(OPERATOR, BATTERY, "plug_cable")
            self._at_station_for = 0

    def step(self) -> TickStatus:
        self.tick_index = self.world.tick
        observables = self.world.observables()
        for k, inj in enumerate(self.config.injections):
            if k not in self._fired and inj.due(self.tick_index, observables):
                self._fired.add(k)
                self._apply(inj)
        self._operator()
        status = self.engine.tick()
        self.world.step()
        return status

    def run(self, max_ticks: Optional[int] = None, log_dir=None) -> RunReport:
        cfg = self.config
        limit = max_ticks if max_ticks is not None else cfg.max_ticks
        trace_path = None
        trace_fh = None
        if log_dir is not None:
            log_dir = Path(log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            trace_path = log_dir / "trace.jsonl"
            trace_fh = open(trace_path, "w", encoding="utf-8")
        series = [self.world.snapshot()]
        status = None
        try:
            for _ in range(limit):
                status = self.step()
                series.append(self.world.snapshot())
                if cfg.stop_on_root_success and status is TickStatus.SUCCESS:
                    break
                if cfg.stop_on_violation:
                    self.bus.flush()
                    if self.verdicts:
                        break
            self.bus.flush()
        finally:
            if trace_fh is not None:
                writer = TraceWriter(trace_fh)
                for m in self.messages:
                    writer(m)
                trace_fh.close()
            self.bus.close()
        report = RunReport(
            name=cfg.name, verdicts=list(self.verdicts), final_world=self.world.snapshot(),
            ticks=self.engine.cycle, root_status=status, trace_path=trace_path,
            messages=list(self.messages), world_series=series,
            monitor_states={m.spec.name: list(m.states) for m in self.monitors},
            bt_trace=self.engine.trace,
        )
        if log_dir is not None:
            write_verdicts(report.verdicts, log_dir / "verdicts.jsonl")
            (log_dir / "report.txt").write_text(report.summary())
        return report

    def describe(self) -> str:
        lines = [f"scenario {self.config.name}"]
        services = [e for e in self.bus.endpoints if not e.startswith("skill/")]
        lines.append(f"service endpoints ({len(services)}): {', '.join(services)}")
        kinds = sorted({s.chart.name or s.id for s in self.skills.values()})
        lines.append(f"skills ({len(kinds)} types, {len(self.skills)} instances):")
        for sid, s in self.skills.items():
            bound = ", ".join(f"{b.endpoint}.{b.procedure}" for b in s.bindings.values()) or "-"
            lines.append(f"  {s.kind.value:9} {sid} [{s.chart.name}] -> {bound}")
        lines.append(f"monitors ({len(self.monitor_specs)}):")
        for spec in self.monitor_specs:
            conns = ", ".join(str(c) for c in spec.patterns)
            lines.append(f"  {spec.name} on {conns}")
        lines.append(f"injections ({len(self.config.injections)}):")
        for inj in self.config.injections:
            lines.append(f"  {inj.describe()}")
        return "\n".join(lines) + "\n"


def run_scenario(config, deterministic: bool = True, log_dir=None, max_ticks: Optional[int] = None,
                 attach_monitors: bool = True, extra_injections: Optional[list[Injection]] = None) -> RunReport:
    if not isinstance(config, ScenarioConfig):
        config = load_config(config)
    if extra_injections:
        config.injections = list(config.injections) + list(extra_injections)
    return Scenario(config, deterministic=deterministic, attach_monitors=attach_monitors).run(
        max_ticks=max_ticks, log_dir=log_dir)


def describe_scenario(config) -> str:
    if not isinstance(config, ScenarioConfig):
        config = load_config(config)
    scenario = Scenario(config)
    try:
        return scenario.describe()
    finally:
        scenario.bus.close()
