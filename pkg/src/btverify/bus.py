"""In-process query bus with port-monitor hooks.

Every ``query`` is a synchronous request/reply exchange on a connection
``client -> server``. Hooks attached to a connection receive copies of both
messages. In deterministic mode (the default) handlers and hooks run inline
in the caller's thread; otherwise each endpoint and each hook is served by
its own worker thread and the per-connection lock keeps the total order.
"""
from __future__ import annotations

import enum
import itertools
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

log = logging.getLogger(__name__)


class Direction(enum.Enum):
    REQUEST = "Request"
    REPLY = "Reply"


@dataclass(frozen=True, order=True)
class ConnectionId:
    client: str
    server: str

    def __str__(self) -> str:
        return f"{self.client}->{self.server}"

    @classmethod
    def parse(cls, text: str) -> "ConnectionId":
        client, sep, server = text.partition("->")
        if not sep or not client.strip() or not server.strip():
            raise ValueError(f"connection must look like 'client->server', got {text!r}")
        return cls(client.strip(), server.strip())

    def matches(self, other: "ConnectionId") -> bool:
        """Pattern match where ``*`` on either side matches any endpoint."""
        return (self.client in ("*", other.client)) and (self.server in ("*", other.server))


@dataclass(frozen=True)
class Message:
    connection: ConnectionId
    direction: Direction
    procedure: str
    payload: dict = field(default_factory=dict)
    seq: int = 0
    t: float = 0.0
    fault: bool = False

    def to_json(self) -> str:
        record = {
            "t": self.t,
            "connection": str(self.connection),
            "direction": self.direction.value,
            "procedure": self.procedure,
            "payload": self.payload,
            "seq": self.seq,
        }
        if self.fault:
            record["fault"] = True
        return json.dumps(record, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "Message":
        record = json.loads(line)
        if not isinstance(record, dict):
            raise ValueError("trace line is not a JSON object")
        return cls(
            connection=ConnectionId.parse(record["connection"]),
            direction=Direction(record["direction"]),
            procedure=str(record["procedure"]),
            payload=dict(record["payload"]),
            seq=int(record["seq"]),
            t=record["t"],
            fault=bool(record.get("fault", False)),
        )


class BusError(RuntimeError):
    pass


class UnknownEndpoint(BusError):
    pass


class DuplicateEndpoint(BusError):
    pass


class QueryError(BusError):
    """The server handler raised; the fault reply has already been emitted."""

    def __init__(self, message: Message, cause: BaseException):
        self.message = message
        self.cause = cause
        super().__init__(f"{message.connection} {message.procedure}: {cause}")


Handler = Callable[[Message], Optional[dict]]
Sink = Callable[[Message], None]


def read_trace(lines: Iterable[str]) -> Iterator[Message]:
    """Parse JSON-lines trace records, skipping blank lines."""
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield Message.from_json(line)
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed trace line {lineno}: {exc}") from None


class TraceWriter:
    """Sink writing one JSON line per message."""

    def __init__(self, fh):
        self.fh = fh

    def __call__(self, message: Message) -> None:
        self.fh.write(message.to_json() + "\n")


class _Hook:
    def __init__(self, patterns: Optional[tuple[ConnectionId, ...]], sink: Sink, asynchronous: bool):
        self.patterns = patterns
        self.sink = sink
        self.worker = ThreadPoolExecutor(max_workers=1) if asynchronous else None

    def wants(self, connection: ConnectionId) -> bool:
        if self.patterns is None:
            return True
        return any(p.matches(connection) for p in self.patterns)

    def deliver(self, message: Message) -> None:
        if self.worker is None:
            self.sink(message)
        else:
            self.worker.submit(self.sink, message)


class Bus:
    def __init__(self, deterministic: bool = True, clock: Optional[Callable[[], float]] = None):
        self.deterministic = deterministic
        self.clock = clock or (lambda: 0.0)
        self._endpoints: dict[str, tuple[Handler, Optional[ThreadPoolExecutor]]] = {}
        self._hooks: dict[int, _Hook] = {}
        self._hook_ids = itertools.count(1)
        self._seq: dict[ConnectionId, int] = {}
        self._conn_locks: dict[ConnectionId, threading.RLock] = {}
        self._lock = threading.RLock()

    # -- endpoints -----------------------------------------------------------

    def register_endpoint(self, name: str, handler: Handler) -> None:
        with self._lock:
            if name in self._endpoints:
                raise DuplicateEndpoint(f"endpoint {name!r} already registered")
            worker = None if self.deterministic else ThreadPoolExecutor(
                max_workers=1, thread_name_prefix=f"ep-{name}")
            self._endpoints[name] = (handler, worker)

    def unregister_endpoint(self, name: str) -> None:
        with self._lock:
            try:
                _, worker = self._endpoints.pop(name)
            except KeyError:
                raise UnknownEndpoint(f"no endpoint {name!r}") from None
        if worker is not None:
            worker.shutdown(wait=True)

    @property
    def endpoints(self) -> list[str]:
        return sorted(self._endpoints)

    # -- hooks ---------------------------------------------------------------

    def attach_portmonitor(self, connection, sink: Sink) -> int:
        """Copy every later message on ``connection`` to ``sink``.

        ``connection`` may also be a wildcard pattern such as ``*->navigation``
        or a list of connections; the sink then sees one stream in bus order.
        """
        if isinstance(connection, (ConnectionId, str)):
            connection = [connection]
        patterns = tuple(c if isinstance(c, ConnectionId) else ConnectionId.parse(c)
                         for c in connection)
        return self._attach(patterns, sink)

    def add_tap(self, sink: Sink) -> int:
        """Like :meth:`attach_portmonitor` but for every connection (trace recording)."""
        return self._attach(None, sink)

    def _attach(self, patterns, sink) -> int:
        with self._lock:
            hook_id = next(self._hook_ids)
            self._hooks[hook_id] = _Hook(patterns, sink, not self.deterministic)
            return hook_id

    def detach(self, hook_id: int) -> None:
        with self._lock:
            try:
                hook = self._hooks.pop(hook_id)
            except KeyError:
                raise BusError(f"no hook with id {hook_id}") from None
        if hook.worker is not None:
            hook.worker.shutdown(wait=True)

    def flush(self) -> None:
        """Wait until asynchronous hooks have consumed everything sent so far."""
        with self._lock:
            workers = [h.worker for h in self._hooks.values() if h.worker is not None]
        for worker in workers:
            worker.submit(lambda: None).result()

    def close(self) -> None:
        with self._lock:
            hooks = list(self._hooks.values())
            self._hooks.clear()
            endpoints = list(self._endpoints.values())
            self._endpoints.clear()
        for hook in hooks:
            if hook.worker is not None:
                hook.worker.shutdown(wait=True)
        for _, worker in endpoints:
            if worker is not None:
                worker.shutdown(wait=True)

    def _emit(self, message: Message) -> None:
        # delivering under the lock gives every hook the same global order
        with self._lock:
            for hook in list(self._hooks.values()):
                if hook.wants(message.connection):
                    hook.deliver(message)

    # -- queries -------------------------------------------------------------

    def _connection_lock(self, connection: ConnectionId) -> threading.RLock:
        with self._lock:
            lock = self._conn_locks.get(connection)
            if lock is None:
                lock = self._conn_locks[connection] = threading.RLock()
            return lock

    def query(self, client: str, server: str, procedure: str, payload: Optional[dict] = None) -> dict:
        """Send a request and block until the reply."""
        connection = ConnectionId(client, server)
        with self._connection_lock(connection):
            with self._lock:
                try:
                    handler, worker = self._endpoints[server]
                except KeyError:
                    raise UnknownEndpoint(f"no endpoint {server!r} (queried by {client!r})") from None
                seq = self._seq.get(connection, 0) + 1
                self._seq[connection] = seq
            request = Message(connection, Direction.REQUEST, procedure, dict(payload or {}),
                              seq, self.clock())
            log.debug("%s", request.to_json())
            self._emit(request)
            try:
                if worker is None:
                    result = handler(request)
                else:
                    result = worker.submit(handler, request).result()
            except Exception as exc:
                reply = Message(connection, Direction.REPLY, procedure, {"error": str(exc)},
                                seq, self.clock(), fault=True)
                self._emit(reply)
                raise QueryError(reply, exc) from exc
            reply = Message(connection, Direction.REPLY, procedure, dict(result or {}),
                            seq, self.clock())
            self._emit(reply)
            return dict(reply.payload)
