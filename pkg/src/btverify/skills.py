"""Skill servers: state charts that implement behavior tree leaves.

A skill chart advances on three events. ``tick`` and ``halt`` arrive from the
behavior tree. ``reply`` (or ``fault``) carries a component's answer: whenever
the chart rests in a state that has a *binding*, the skill sends that
binding's query and delivers the answer back to the chart. Once the chart
reaches an unbound state, the state's entry in the status table is the tick
result.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .behavior_tree import NodeKind, TickStatus, WiringError
from .bus import Bus, Message, QueryError, UnknownEndpoint
from .statechart import ChartInstance, Event, StateChart, load_scxml

log = logging.getLogger(__name__)

SKILL_PREFIX = "skill/"
BT_CLIENT = "bt"
MAX_SETTLE_STEPS = 32


class SkillError(RuntimeError):
    pass


class SkillProtocolError(SkillError):
    pass


@dataclass(frozen=True)
class Binding:
    endpoint: str
    procedure: str
    args: dict = field(default_factory=dict)

    def resolve_args(self, variables: dict) -> dict:
        out = {}
        for key, value in self.args.items():
            if isinstance(value, str) and value.startswith("$"):
                name = value[1:]
                if name not in variables:
                    raise SkillError(f"binding argument {key!r} refers to unknown variable {name!r}")
                out[key] = variables[name]
            else:
                out[key] = value
        return out


@dataclass
class Skill:
    id: str
    kind: NodeKind
    chart: StateChart
    bindings: dict[str, Binding]
    statuses: dict[str, TickStatus]

    def __post_init__(self):
        if self.kind not in (NodeKind.ACTION, NodeKind.CONDITION):
            raise SkillError(f"skill {self.id!r}: kind must be Action or Condition")
        states = set(self.chart.states)
        for state in list(self.bindings) + list(self.statuses):
            if state not in states:
                raise SkillError(f"skill {self.id!r}: no chart state {state!r}")
        both = set(self.bindings) & set(self.statuses)
        if both:
            raise SkillError(f"skill {self.id!r}: states {sorted(both)} are both bound and terminal")
        if self.kind is NodeKind.CONDITION and TickStatus.RUNNING in self.statuses.values():
            raise SkillError(f"condition skill {self.id!r} may not map a state to Running")

    @property
    def endpoint(self) -> str:
        return SKILL_PREFIX + self.id


class SkillServer:
    """Serves ``tick`` and ``halt`` for one skill over the bus."""

    def __init__(self, skill: Skill, bus: Bus):
        self.skill = skill
        self.bus = bus
        self.instance = ChartInstance(skill.chart)
        self.last_fault: Optional[Message] = None
        self._lock = threading.Lock()

    def __call__(self, request: Message) -> dict:
        with self._lock:
            if request.procedure == "tick":
                return {"status": self.handle_tick().value}
            if request.procedure == "halt":
                self.handle_halt()
                return {}
            raise SkillProtocolError(f"skill {self.skill.id!r} has no procedure {request.procedure!r}")

    def replace_chart(self, chart: StateChart) -> None:
        self.skill.chart = chart
        self.instance = ChartInstance(chart)

    def _settle(self) -> bool:
        """Run bound queries until the chart rests; False on an unhandled fault."""
        inst = self.instance
        for _ in range(MAX_SETTLE_STEPS):
            binding = self.skill.bindings.get(inst.state)
            if binding is None:
                return True
            args = binding.resolve_args(inst.variables)
            try:
                reply = self.bus.query(self.skill.endpoint, binding.endpoint, binding.procedure, args)
                event = Event("reply", reply)
            except QueryError as exc:
                self.last_fault = exc.message
                event = Event("fault", {"error": str(exc.cause)})
            report = inst.deliver(event)
            if not report.fired:
                if event.name == "fault":
                    log.warning("skill %s: unhandled fault %s", self.skill.id, event.payload["error"])
                    return False
                raise SkillProtocolError(
                    f"skill {self.skill.id!r}: no transition for {event.name} in state {inst.state!r}")
        raise SkillProtocolError(f"skill {self.skill.id!r} did not settle in {MAX_SETTLE_STEPS} steps")

    def handle_tick(self) -> TickStatus:
        inst = self.instance
        report = inst.deliver(Event("tick"))
        if not report.fired and inst.state not in self.skill.statuses:
            raise SkillProtocolError(f"skill {self.skill.id!r}: no tick transition from {inst.state!r}")
        if not self._settle():
            inst.reset()
            return TickStatus.FAILURE
        try:
            status = self.skill.statuses[inst.state]
        except KeyError:
            raise SkillProtocolError(
                f"skill {self.skill.id!r} rested in {inst.state!r}, which maps to no status") from None
        if self.skill.kind is NodeKind.CONDITION:
            inst.reset()
        return status

    def handle_halt(self) -> None:
        if self.skill.kind is not NodeKind.ACTION:
            raise SkillProtocolError(f"halt sent to condition skill {self.skill.id!r}")
        if self.instance.deliver(Event("halt")).fired:
            self._settle()
        self.instance.reset()


def load_skill_manifest(path, locations: Optional[dict] = None) -> dict[str, Skill]:
    """Read a bindings manifest and its charts.

    ``locations`` maps location names to objects with ``x``/``y``; a skill whose
    ``params`` name a ``location`` gets ``target_x``/``target_y`` filled from it
    when its chart declares those variables.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"skill manifest not found: {path}")
    data = json.loads(path.read_text())
    base = path.parent
    skills = {}
    for skill_id, entry in data["skills"].items():
        chart = load_scxml(base / entry["chart"])
        params = dict(entry.get("params", {}))
        loc_name = params.get("location")
        if loc_name is not None and locations is not None and "target_x" in chart.variables:
            if loc_name not in locations:
                raise SkillError(f"skill {skill_id!r}: unknown location {loc_name!r}")
            params.setdefault("target_x", locations[loc_name].x)
            params.setdefault("target_y", locations[loc_name].y)
        if params:
            chart = chart.with_variables(**params)
        bindings = {state: Binding(b["endpoint"], b["procedure"], dict(b.get("args", {})))
                    for state, b in entry.get("bindings", {}).items()}
        statuses = {state: TickStatus.parse(s) for state, s in entry["statuses"].items()}
        kind = NodeKind(entry["kind"])
        skills[skill_id] = Skill(skill_id, kind, chart, bindings, statuses)
    return skills


class SkillHost:
    """Registers one bus endpoint per skill."""

    def __init__(self, bus: Bus, skills: dict[str, Skill]):
        self.bus = bus
        self.servers: dict[str, SkillServer] = {}
        for skill_id, skill in skills.items():
            server = SkillServer(skill, bus)
            bus.register_endpoint(skill.endpoint, server)
            self.servers[skill_id] = server

    def __getitem__(self, skill_id: str) -> SkillServer:
        return self.servers[skill_id]

    def override(self, skill_id: str, **variables) -> None:
        """Replace initial chart variables of a skill, e.g. a guard threshold."""
        server = self.servers[skill_id]
        server.replace_chart(server.skill.chart.with_variables(**variables))


class BusLeafExecutor:
    """Behavior tree leaf executor forwarding Tick/Halt over the bus."""

    def __init__(self, bus: Bus, client: str = BT_CLIENT):
        self.bus = bus
        self.client = client

    def tick(self, leaf_id: str) -> TickStatus:
        try:
            reply = self.bus.query(self.client, SKILL_PREFIX + leaf_id, "tick")
        except UnknownEndpoint as exc:
            raise WiringError(f"no skill serves leaf {leaf_id!r}") from exc
        return TickStatus.parse(reply["status"])

    def halt(self, leaf_id: str) -> None:
        try:
            self.bus.query(self.client, SKILL_PREFIX + leaf_id, "halt")
        except UnknownEndpoint as exc:
            raise WiringError(f"no skill serves leaf {leaf_id!r}") from exc
