"""Interpreter for a flat SCXML subset.

Supported elements: ``scxml``, ``state``, ``final``, ``transition``,
``datamodel``/``data`` and ``assign`` inside a transition. Transitions are
tried in document order and the first one whose guard holds fires.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Any, Optional

from .expressions import EvaluationError, Expression, ExpressionSyntaxError, Scalar


class ChartParseError(ValueError):
    pass


class DeliveryError(RuntimeError):
    """A guard or assignment could not be evaluated for a delivered event."""


@dataclass(frozen=True)
class Assign:
    location: str
    expr: Expression


@dataclass(frozen=True)
class Transition:
    source: str
    event: str
    target: str
    guard: Optional[Expression] = None
    assigns: tuple[Assign, ...] = ()

    def matches(self, event_name: str) -> bool:
        return self.event == "*" or self.event == event_name


@dataclass
class StateChart:
    states: list[str]
    initial: str
    transitions: list[Transition]
    variables: dict[str, Scalar] = field(default_factory=dict)
    final_states: set[str] = field(default_factory=set)
    name: str = ""

    def __post_init__(self):
        if self.initial not in self.states:
            raise ChartParseError(f"initial state {self.initial!r} is not a state")
        known = set(self.states)
        for t in self.transitions:
            for end in (t.source, t.target):
                if end not in known:
                    raise ChartParseError(f"dangling transition {t.source!r} -> {t.target!r}: "
                                          f"no state {end!r}")

    def outgoing(self, state: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == state]

    def with_variables(self, **overrides: Scalar) -> "StateChart":
        """Copy of the chart with some initial variable values replaced."""
        unknown = set(overrides) - set(self.variables)
        if unknown:
            raise KeyError(f"chart {self.name!r} has no variables {sorted(unknown)}")
        return StateChart(list(self.states), self.initial, list(self.transitions),
                          {**self.variables, **overrides}, set(self.final_states), self.name)


@dataclass(frozen=True)
class Event:
    name: str
    payload: dict[str, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise ValueError("event name must be nonempty")


@dataclass(frozen=True)
class TransitionReport:
    fired: bool
    old_state: str
    new_state: str
    event: Event
    transition: Optional[Transition] = None


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _no_refs(parts):
    raise EvaluationError(f"data expr may not reference {'.'.join(parts)!r}")


def _literal(text: str) -> Scalar:
    try:
        value = Expression(text).evaluate(_no_refs)
    except (ExpressionSyntaxError, EvaluationError) as exc:
        raise ChartParseError(f"bad data expr {text!r}: {exc}") from None
    return value


def _expr(text: str, where: str) -> Expression:
    try:
        return Expression(text)
    except ExpressionSyntaxError as exc:
        raise ChartParseError(f"unparsable {where} {text!r}: {exc}") from None


def parse_scxml(document: str) -> StateChart:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise ChartParseError(f"malformed XML: {exc}") from None
    if _local(root.tag) != "scxml":
        raise ChartParseError(f"unknown element <{_local(root.tag)}>: document must be <scxml>")

    states: list[str] = []
    finals: set[str] = set()
    variables: dict[str, Scalar] = {}
    transitions: list[Transition] = []

    for child in root:
        tag = _local(child.tag)
        if tag == "datamodel":
            for data in child:
                if _local(data.tag) != "data":
                    raise ChartParseError(f"unknown element <{_local(data.tag)}> in datamodel")
                if not data.get("id"):
                    raise ChartParseError("<data> needs an id")
                variables[data.get("id")] = _literal(data.get("expr", "0"))
        elif tag in ("state", "final"):
            sid = child.get("id")
            if not sid:
                raise ChartParseError(f"<{tag}> needs an id")
            if sid in states:
                raise ChartParseError(f"duplicate state {sid!r}")
            states.append(sid)
            if tag == "final":
                finals.add(sid)
            for sub in child:
                if _local(sub.tag) != "transition":
                    raise ChartParseError(f"unknown element <{_local(sub.tag)}> in state {sid!r}")
                transitions.append(_parse_transition(sid, sub))
        else:
            raise ChartParseError(f"unknown element <{tag}>")

    if not states:
        raise ChartParseError("chart has no states")
    initial = root.get("initial", states[0])
    return StateChart(states, initial, transitions, variables, finals, root.get("name", ""))


def _parse_transition(source: str, elem: ET.Element) -> Transition:
    event = elem.get("event")
    target = elem.get("target")
    if not event:
        raise ChartParseError(f"transition from {source!r} needs an event")
    if not target:
        raise ChartParseError(f"transition from {source!r} on {event!r} needs a target")
    cond = elem.get("cond")
    guard = _expr(cond, "cond") if cond is not None else None
    assigns = []
    for sub in elem:
        if _local(sub.tag) != "assign":
            raise ChartParseError(f"unknown element <{_local(sub.tag)}> in transition")
        loc, expr = sub.get("location"), sub.get("expr")
        if not loc or expr is None:
            raise ChartParseError("<assign> needs location and expr")
        assigns.append(Assign(loc, _expr(expr, "assign expr")))
    return Transition(source, event, target, guard, tuple(assigns))


def load_scxml(path) -> StateChart:
    with open(path, encoding="utf-8") as fh:
        return parse_scxml(fh.read())


class ChartInstance:
    """A running copy of a chart, holding the current state and variables."""

    def __init__(self, chart: StateChart, record_history: bool = False):
        self.chart = chart
        self._by_source: dict[str, list[Transition]] = {}
        for t in chart.transitions:
            self._by_source.setdefault(t.source, []).append(t)
        self.history: Optional[list[TransitionReport]] = [] if record_history else None
        self.reset()

    def reset(self) -> None:
        self.state = self.chart.initial
        self.variables: dict[str, Any] = dict(self.chart.variables)

    def _lookup(self, payload: dict):
        variables = self.variables

        def lookup(parts: tuple[str, ...]):
            if parts[0] == "_event":
                if parts[1:2] == ("data",) and len(parts) == 3:
                    key = parts[2]
                elif len(parts) == 2 and parts[1] != "name":
                    key = parts[1]
                else:
                    raise EvaluationError(f"unsupported reference {'.'.join(parts)!r}")
                if key not in payload:
                    raise EvaluationError(f"event has no payload field {key!r}")
                return payload[key]
            name = ".".join(parts)
            if name in payload:
                return payload[name]
            if name in variables:
                return variables[name]
            raise EvaluationError(f"no payload field or variable {name!r}")

        return lookup

    def deliver(self, event: Event) -> TransitionReport:
        old = self.state
        lookup = self._lookup(event.payload)
        report = None
        for t in self._by_source.get(old, ()):
            if not t.matches(event.name):
                continue
            if t.guard is not None:
                try:
                    passed = t.guard.evaluate(lookup)
                except EvaluationError as exc:
                    raise DeliveryError(
                        f"guard {t.guard.source!r} on {old!r} --{event.name}-->: {exc}") from None
                if not isinstance(passed, bool):
                    raise DeliveryError(f"guard {t.guard.source!r} is not boolean")
                if not passed:
                    continue
            for a in t.assigns:
                try:
                    self.variables[a.location] = a.expr.evaluate(lookup)
                except EvaluationError as exc:
                    raise DeliveryError(f"assign {a.location!r}: {exc}") from None
            self.state = t.target
            report = TransitionReport(True, old, t.target, event, t)
            break
        if report is None:
            report = TransitionReport(False, old, old, event)
        if self.history is not None:
            self.history.append(report)
        return report


def deliver(instance: ChartInstance, event: Event) -> TransitionReport:
    return instance.deliver(event)
