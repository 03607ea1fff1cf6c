"""Behavior tree parsing and reactive tick execution.

Trees are read from the Groot / BehaviorTree.CPP XML dialect and executed
with memoryless Sequence and Fallback composites. Leaves are delegated to a
:class:`LeafExecutor`, which is usually a client of the message bus.
"""
from __future__ import annotations

import enum
import logging
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Optional, Protocol

log = logging.getLogger(__name__)


class TickStatus(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    RUNNING = "Running"

    @classmethod
    def parse(cls, text: str) -> "TickStatus":
        for status in cls:
            if status.value.lower() == str(text).lower():
                return status
        raise ValueError(f"not a tick status: {text!r}")

    def __str__(self) -> str:
        return self.value


class NodeKind(enum.Enum):
    SEQUENCE = "Sequence"
    FALLBACK = "Fallback"
    ACTION = "Action"
    CONDITION = "Condition"

    @property
    def is_leaf(self) -> bool:
        return self in _LEAF_KINDS


_LEAF_KINDS = frozenset((NodeKind.ACTION, NodeKind.CONDITION))


@dataclass(frozen=True)
class BTNode:
    kind: NodeKind
    id: Optional[str] = None
    children: tuple["BTNode", ...] = ()
    name: Optional[str] = None

    def __post_init__(self):
        # cached because the tick loop asks for it on every visit
        object.__setattr__(self, "is_leaf", self.kind.is_leaf)
        if self.is_leaf:
            if self.children:
                raise ValueError(f"{self.kind.value} {self.id!r} cannot have children")
            if not self.id:
                raise ValueError(f"{self.kind.value} needs a nonempty ID")
        elif not self.children:
            raise ValueError(f"{self.kind.value} needs at least one child")

    is_leaf: bool = field(init=False, repr=False, compare=False)

    def walk(self, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "BTNode"]]:
        """Yield ``(path, node)`` pairs in document order."""
        yield path, self
        for i, child in enumerate(self.children):
            yield from child.walk(path + (i,))

    def leaves(self) -> list["BTNode"]:
        return [node for _, node in self.walk() if node.is_leaf]


def sequence(*children: BTNode, name: Optional[str] = None) -> BTNode:
    return BTNode(NodeKind.SEQUENCE, children=tuple(children), name=name)


def fallback(*children: BTNode, name: Optional[str] = None) -> BTNode:
    return BTNode(NodeKind.FALLBACK, children=tuple(children), name=name)


def action(leaf_id: str) -> BTNode:
    return BTNode(NodeKind.ACTION, id=leaf_id)


def condition(leaf_id: str) -> BTNode:
    return BTNode(NodeKind.CONDITION, id=leaf_id)


# -- parsing -----------------------------------------------------------------

class BTParseError(ValueError):
    """Raised for any problem in a behavior tree document.

    ``reason`` is one of the fixed strings below so callers can branch on it.
    """

    MALFORMED = "malformed XML"
    UNKNOWN_ELEMENT = "unknown element"
    MISSING_MAIN_TREE = "missing main tree"
    EMPTY_COMPOSITE = "composite with no children"
    LEAF_WITH_CHILDREN = "leaf with children"
    LEAF_WITHOUT_ID = "leaf without ID"

    def __init__(self, reason: str, element: str = "", detail: str = ""):
        self.reason = reason
        self.element = element
        msg = reason
        if element:
            msg += f": <{element}>"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


_COMPOSITES = {"Sequence": NodeKind.SEQUENCE, "Fallback": NodeKind.FALLBACK}
_LEAVES = {"Action": NodeKind.ACTION, "Condition": NodeKind.CONDITION}
_KNOWN_ATTRS = {"ID", "name"}


def _describe(elem: ET.Element) -> str:
    ident = elem.get("ID") or elem.get("name")
    return f'{elem.tag} ID="{ident}"' if ident else elem.tag


def _build(elem: ET.Element) -> BTNode:
    tag = elem.tag
    extra = set(elem.attrib) - _KNOWN_ATTRS
    if extra:
        log.warning("ignoring attributes %s on <%s>", sorted(extra), _describe(elem))
    children = list(elem)
    if tag in _COMPOSITES:
        if not children:
            raise BTParseError(BTParseError.EMPTY_COMPOSITE, _describe(elem))
        return BTNode(_COMPOSITES[tag], children=tuple(_build(c) for c in children),
                      name=elem.get("name"))
    if tag in _LEAVES:
        if children:
            raise BTParseError(BTParseError.LEAF_WITH_CHILDREN, _describe(elem))
        leaf_id = elem.get("ID")
        if not leaf_id:
            raise BTParseError(BTParseError.LEAF_WITHOUT_ID, _describe(elem))
        return BTNode(_LEAVES[tag], id=leaf_id, name=elem.get("name"))
    raise BTParseError(BTParseError.UNKNOWN_ELEMENT, _describe(elem))


def parse_bt_xml(document: str) -> BTNode:
    """Parse a Groot-style XML document into its main tree."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise BTParseError(BTParseError.MALFORMED, detail=str(exc)) from None
    if root.tag != "root":
        raise BTParseError(BTParseError.UNKNOWN_ELEMENT, _describe(root), "document element must be <root>")

    trees: dict[str, ET.Element] = {}
    for child in root:
        if child.tag == "BehaviorTree":
            trees[child.get("ID", "")] = child
        elif child.tag == "TreeNodesModel":
            continue  # Groot editor metadata
        else:
            raise BTParseError(BTParseError.UNKNOWN_ELEMENT, _describe(child))

    main = root.get("main_tree_to_execute")
    if main is None and len(trees) == 1:
        main = next(iter(trees))
    if main is None or main not in trees:
        raise BTParseError(BTParseError.MISSING_MAIN_TREE, "root",
                           f"main_tree_to_execute={main!r}, trees={sorted(trees)}")
    body = list(trees[main])
    if len(body) != 1:
        raise BTParseError(BTParseError.MISSING_MAIN_TREE, f'BehaviorTree ID="{main}"',
                           f"expected exactly one top-level node, found {len(body)}")
    return _build(body[0])


def load_bt(path) -> BTNode:
    with open(path, encoding="utf-8") as fh:
        return parse_bt_xml(fh.read())


# -- execution ---------------------------------------------------------------

class WiringError(RuntimeError):
    """A leaf id could not be resolved by the executor."""


class LeafExecutor(Protocol):
    def tick(self, leaf_id: str) -> TickStatus: ...

    def halt(self, leaf_id: str) -> None: ...


class FunctionExecutor:
    """Executor backed by plain callables, handy for tests and scripts.

    ``behaviours`` maps a leaf id to a zero-argument callable returning a
    :class:`TickStatus`. Halts are recorded in :attr:`halted`.
    """

    def __init__(self, behaviours: dict[str, Callable[[], TickStatus]]):
        self.behaviours = behaviours
        self.halted: list[str] = []

    def tick(self, leaf_id: str) -> TickStatus:
        try:
            fn = self.behaviours[leaf_id]
        except KeyError:
            raise WiringError(f"no executor for leaf {leaf_id!r}") from None
        return fn()

    def halt(self, leaf_id: str) -> None:
        self.halted.append(leaf_id)


TICK_SENT = "tick_sent"
STATUS_RETURNED = "status_returned"
HALT_SENT = "halt_sent"


class TraceEntry(NamedTuple):
    cycle: int
    path: tuple[int, ...]
    event: str
    status: Optional[TickStatus] = None
    leaf_id: Optional[str] = None

    @property
    def path_str(self) -> str:
        return "/".join(map(str, self.path)) or "root"


@dataclass
class TickTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    statuses: list[TickStatus] = field(default_factory=list)

    def leaf_ticks(self, cycle: Optional[int] = None) -> list[str]:
        return [e.leaf_id for e in self.entries
                if e.event == TICK_SENT and e.leaf_id is not None
                and (cycle is None or e.cycle == cycle)]

    def halts(self, cycle: Optional[int] = None) -> list[str]:
        return [e.leaf_id for e in self.entries
                if e.event == HALT_SENT and (cycle is None or e.cycle == cycle)]

    def __len__(self) -> int:
        return len(self.entries)


class _Tick:
    """State for a single traversal of the tree."""

    __slots__ = ("executor", "entries", "cycle", "running", "halted", "now_running")

    def __init__(self, executor, entries, cycle, running):
        self.executor = executor
        self.entries = entries
        self.cycle = cycle
        # leaves that returned Running in the previous cycle, keyed by path
        self.running = running
        self.halted: list[tuple[int, ...]] = []
        self.now_running: dict[tuple[int, ...], str] = {}

    def visit(self, node: BTNode, path: tuple[int, ...]) -> TickStatus:
        entries = self.entries
        if entries is not None:
            entries.append(TraceEntry(self.cycle, path, TICK_SENT, leaf_id=node.id))
        if node.is_leaf:
            try:
                status = self.executor.tick(node.id)
            except WiringError:
                raise
            except KeyError as exc:
                raise WiringError(f"no executor for leaf {node.id!r}") from exc
            if status is TickStatus.RUNNING:
                self.now_running[path] = node.id
        else:
            # Sequence stops on anything but Success, Fallback on anything but Failure
            advance = TickStatus.SUCCESS if node.kind is NodeKind.SEQUENCE else TickStatus.FAILURE
            status = advance
            children = node.children
            for i, child in enumerate(children):
                status = self.visit(child, path + (i,))
                if status is not advance:
                    if self.running and i + 1 < len(children):
                        self._halt_after(path, i + 1)
                    break
        if entries is not None:
            entries.append(TraceEntry(self.cycle, path, STATUS_RETURNED, status, node.id))
        return status

    def _halt_after(self, parent: tuple[int, ...], first_skipped: int) -> None:
        depth = len(parent)
        for leaf_path in sorted(self.running):
            if (leaf_path[:depth] == parent and leaf_path[depth] >= first_skipped
                    and leaf_path not in self.halted):
                self.halt(leaf_path)

    def halt(self, leaf_path: tuple[int, ...]) -> None:
        leaf_id = self.running[leaf_path]
        if self.entries is not None:
            self.entries.append(TraceEntry(self.cycle, leaf_path, HALT_SENT, leaf_id=leaf_id))
        self.halted.append(leaf_path)
        self.executor.halt(leaf_id)


def tick_once(root: BTNode, executor: LeafExecutor, *, trace: Optional[TickTrace] = None,
              running: Optional[dict[tuple[int, ...], str]] = None, cycle: int = 0) -> TickStatus:
    """Send one tick from the root and return its status.

    ``running`` maps the paths of leaves that returned Running on the previous
    cycle to their ids. Any of them that this traversal skips is halted as soon
    as its ancestor composite short-circuits, and the mapping is updated in
    place to the leaves running after this cycle.
    """
    tick = _Tick(executor, trace.entries if trace is not None else None, cycle, running)
    status = tick.visit(root, ())
    if running is not None:
        # every unticked leaf sits under some short-circuited composite, so this
        # sweep only catches leaves that were ticked again and stopped running
        running.clear()
        running.update(tick.now_running)
    if trace is not None:
        trace.statuses.append(status)
    return status


StopCondition = Callable[[int, TickStatus], bool]


def until_status(*statuses: TickStatus) -> StopCondition:
    return lambda cycle, status: status in statuses


def after_cycles(n: int) -> StopCondition:
    return lambda cycle, status: cycle + 1 >= n


class VirtualClock:
    """Clock whose sleep advances time instantly."""

    def __init__(self, start: float = 0.0):
        self.t = start

    def now(self) -> float:
        return self.t

    def sleep(self, dt: float) -> None:
        self.t += max(dt, 0.0)


class WallClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, dt: float) -> None:
        if dt > 0:
            time.sleep(dt)


class BehaviorTreeEngine:
    """Ticks a tree repeatedly, halting leaves that lose their ticks."""

    def __init__(self, root: BTNode, executor: LeafExecutor, trace: Optional[TickTrace] = None):
        self.root = root
        self.executor = executor
        self.trace = trace if trace is not None else TickTrace()
        self.running: dict[tuple[int, ...], str] = {}
        self.cycle = 0
        self.last_status: Optional[TickStatus] = None

    def tick(self) -> TickStatus:
        status = tick_once(self.root, self.executor, trace=self.trace,
                           running=self.running, cycle=self.cycle)
        self.cycle += 1
        self.last_status = status
        return status

    def halt_all(self) -> None:
        """Halt every leaf left running, e.g. when shutting the engine down."""
        for path in sorted(self.running):
            leaf_id = self.running[path]
            self.trace.entries.append(TraceEntry(self.cycle, path, HALT_SENT, leaf_id=leaf_id))
            self.executor.halt(leaf_id)
        self.running.clear()


def run_engine(root: BTNode, executor: LeafExecutor, frequency: float = 10.0,
               stop: StopCondition = until_status(TickStatus.SUCCESS, TickStatus.FAILURE),
               clock=None, on_cycle: Optional[Callable[[int, TickStatus], None]] = None) -> TickTrace:
    """Tick ``root`` at ``frequency`` Hz until ``stop(cycle, status)`` holds.

    There is no internal timeout. ``clock`` defaults to a :class:`VirtualClock`
    so tests never wait on real time.
    """
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    clock = clock or VirtualClock()
    period = 1.0 / frequency
    engine = BehaviorTreeEngine(root, executor)
    while True:
        started = clock.now()
        cycle = engine.cycle
        status = engine.tick()
        if on_cycle is not None:
            on_cycle(cycle, status)
        if stop(cycle, status):
            return engine.trace
        clock.sleep(period - (clock.now() - started))
