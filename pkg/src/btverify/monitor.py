"""Runtime monitors fed by port-monitor hooks or by a recorded trace.

A monitor is a state chart plus a JSON manifest that says which intercepted
messages become which chart events. Entering one of the manifest's failure
states produces a single latched :class:`Verdict`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .bus import Bus, ConnectionId, Direction, Message, read_trace
from .statechart import ChartInstance, Event, StateChart, load_scxml


class MonitorSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Subscription:
    connection: ConnectionId  # may contain "*" wildcards
    event: str
    direction: Optional[Direction] = None
    procedure: Optional[str] = None
    fields: Optional[tuple[str, ...]] = None
    fault: bool = False

    def matches(self, message: Message) -> bool:
        return (self.connection.matches(message.connection)
                and (self.direction is None or self.direction is message.direction)
                and (self.procedure is None or self.procedure == message.procedure)
                and message.fault == self.fault)

    def to_event(self, message: Message) -> Event:
        if self.fields is None:
            payload = dict(message.payload)
        else:
            payload = {k: message.payload[k] for k in self.fields if k in message.payload}
        payload["t"] = message.t
        payload["seq"] = message.seq
        return Event(self.event, payload)


@dataclass
class MonitorSpec:
    name: str
    chart: StateChart
    subscriptions: list[Subscription]
    failure_states: set[str]
    path: Optional[Path] = None

    def __post_init__(self):
        if not self.subscriptions:
            raise MonitorSpecError(f"monitor {self.name!r} has no subscriptions")
        missing = set(self.failure_states) - set(self.chart.states)
        if missing:
            raise MonitorSpecError(f"monitor {self.name!r}: failure states {sorted(missing)} not in chart")
        if not self.failure_states:
            raise MonitorSpecError(f"monitor {self.name!r} declares no failure states")

    @property
    def patterns(self) -> list[ConnectionId]:
        seen = []
        for sub in self.subscriptions:
            if sub.connection not in seen:
                seen.append(sub.connection)
        return seen


def _subscription(entry: dict) -> Subscription:
    try:
        connection = ConnectionId.parse(entry["connection"])
        event = entry["event"]
    except KeyError as exc:
        raise MonitorSpecError(f"subscription missing {exc.args[0]!r}: {entry}") from None
    except ValueError as exc:
        raise MonitorSpecError(str(exc)) from None
    direction = entry.get("direction")
    if direction is not None:
        try:
            direction = Direction(direction)
        except ValueError:
            raise MonitorSpecError(f"bad direction {direction!r}") from None
    procedure = entry.get("procedure")
    fields = entry.get("fields")
    return Subscription(connection, event, direction,
                        None if procedure in (None, "*") else procedure,
                        tuple(fields) if fields is not None else None,
                        bool(entry.get("fault", False)))


def load_monitor(path, parameters: Optional[dict] = None) -> MonitorSpec:
    """Read a monitor manifest; ``parameters`` override chart variables."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"monitor spec not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MonitorSpecError(f"{path}: {exc}") from None
    for key in ("name", "chart", "failure_states"):
        if key not in data:
            raise MonitorSpecError(f"{path}: missing {key!r}")
    chart = load_scxml(path.parent / data["chart"])
    params = {**data.get("parameters", {}), **(parameters or {})}
    if params:
        try:
            chart = chart.with_variables(**params)
        except KeyError as exc:
            raise MonitorSpecError(str(exc)) from None
    subs = [_subscription(e) for e in data.get("subscriptions", [])]
    return MonitorSpec(data["name"], chart, subs, set(data["failure_states"]), path)


@dataclass(frozen=True)
class Verdict:
    monitor: str
    state: str
    violated: bool
    seq: int
    t: float
    witness: Message = field(compare=True)

    def to_dict(self) -> dict:
        return {
            "monitor": self.monitor,
            "state": self.state,
            "violated": self.violated,
            "at": {"seq": self.seq, "t": self.t},
            "witness": json.loads(self.witness.to_json()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class MonitorInstance:
    """One live monitor: translates messages to events and latches verdicts."""

    def __init__(self, spec: MonitorSpec):
        self.spec = spec
        self.chart = ChartInstance(spec.chart, record_history=True)
        self.verdict: Optional[Verdict] = None
        self.messages_seen = 0
        self.states: list[str] = [self.chart.state]

    @property
    def state(self) -> str:
        return self.chart.state

    @property
    def violated(self) -> bool:
        return self.verdict is not None

    def feed(self, message: Message) -> Optional[Verdict]:
        """Deliver ``message`` if subscribed; returns a verdict only on first violation."""
        emitted = None
        for sub in self.spec.subscriptions:
            if not sub.matches(message):
                continue
            self.messages_seen += 1
            report = self.chart.deliver(sub.to_event(message))
            if report.fired:
                self.states.append(report.new_state)
            if self.verdict is None and self.chart.state in self.spec.failure_states:
                self.verdict = Verdict(self.spec.name, self.chart.state, True,
                                       message.seq, message.t, message)
                emitted = self.verdict
            break
        return emitted

    __call__ = feed

    def attach(self, bus: Bus) -> int:
        """Hook this monitor onto every connection it subscribes to."""
        return bus.attach_portmonitor(self.spec.patterns, self.feed)


def feed(instance: MonitorInstance, message: Message) -> Optional[Verdict]:
    return instance.feed(message)


SpecLike = Union[MonitorSpec, str, Path]


def _specs(specs) -> list[MonitorSpec]:
    if isinstance(specs, (MonitorSpec, str, Path)):
        specs = [specs]
    return [s if isinstance(s, MonitorSpec) else load_monitor(s) for s in specs]


def check_messages(messages: Iterable[Message], specs) -> list[Verdict]:
    monitors = [MonitorInstance(s) for s in _specs(specs)]
    verdicts = []
    for message in messages:
        for m in monitors:
            v = m.feed(message)
            if v is not None:
                verdicts.append(v)
    return verdicts


def check_trace(trace_path, specs) -> list[Verdict]:
    """Replay a JSON-lines bus trace through fresh monitors."""
    with open(trace_path, encoding="utf-8") as fh:
        return check_messages(read_trace(fh), specs)


def write_verdicts(verdicts: Iterable[Verdict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(v.to_json() + "\n")
