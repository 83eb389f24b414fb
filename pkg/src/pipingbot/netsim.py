"""Discrete-event simulation core.

A :class:`Simulation` owns the virtual clock, the event queue, the host
registry and the LANs. Hosts exchange :class:`TrafficEvent` records through
:meth:`Simulation.send`; a LAN may carry one interceptor (the MITM position a
bot obtains by ARP spoofing), which sees victim traffic in both directions
before it is delivered.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import IO, Any, Callable, Iterable, Mapping, Optional

logger = logging.getLogger(__name__)


class SchedulingError(ValueError):
    """Raised when an action is scheduled before the current clock."""


class TopologyError(ValueError):
    """Raised for unknown hosts or an inconsistent MITM configuration."""


class Method(str, Enum):
    GET = "GET"
    POST = "POST"
    SSH_EXEC = "SSH_EXEC"
    LOCAL_HTTP = "LOCAL_HTTP"


class Direction(str, Enum):
    REQUEST = "request"
    RESPONSE = "response"


@dataclass(frozen=True)
class TrafficEvent:
    """One application-layer message as seen on the wire.

    ``session`` identifies the TCP session a request rides on; the first
    request seen with a new session id marks a session start. ``via`` names
    the interceptor when the event was fabricated or rewritten in transit.
    """

    time: int
    src: str
    dst_host: str
    method: Method
    path: str
    payload: Mapping[str, Any] = field(default_factory=dict)
    direction: Direction = Direction.REQUEST
    lan: str = ""
    event_id: int = -1
    reply_to: Optional[int] = None
    session: Optional[int] = None
    via: Optional[str] = None

    @property
    def is_request(self) -> bool:
        return self.direction is Direction.REQUEST

    def response(self, payload: Mapping[str, Any], *, src: str | None = None,
                 time: int | None = None) -> "TrafficEvent":
        """Build the response answering this request."""
        return TrafficEvent(
            time=self.time if time is None else time,
            src=src or self.dst_host,
            dst_host=self.src,
            method=self.method,
            path=self.path,
            payload=payload,
            direction=Direction.RESPONSE,
            lan=self.lan,
            reply_to=self.event_id,
            session=self.session,
        )


def payload_digest(payload: Mapping[str, Any]) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


TRACE_FIELDS = ("time", "lan", "src", "dst_host", "method", "path", "direction", "payload_digest")


def trace_record(event: TrafficEvent) -> dict:
    return {
        "time": event.time,
        "lan": event.lan,
        "src": event.src,
        "dst_host": event.dst_host,
        "method": event.method.value,
        "path": event.path,
        "direction": event.direction.value,
        "payload_digest": payload_digest(event.payload),
    }


def write_trace(events: Iterable[TrafficEvent], fh: IO[str]) -> int:
    """Write one JSON record per line; returns the number of lines."""
    n = 0
    for event in events:
        fh.write(json.dumps(trace_record(event), separators=(",", ":")))
        fh.write("\n")
        n += 1
    return n


def read_trace(fh: IO[str]) -> list[dict]:
    return [json.loads(line) for line in fh if line.strip()]


# -- randomness -------------------------------------------------------------

def stream_id(name: str) -> int:
    """Stable 64-bit stream id for a device name."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")


def random_stream(seed: int, stream: int) -> random.Random:
    """Independent generator for ``(seed, stream)``.

    The pair is hashed rather than added so that neighbouring seeds and
    stream ids do not produce correlated sequences.
    """
    key = hashlib.sha256(f"{seed & (2**64 - 1)}:{stream}".encode()).digest()
    return random.Random(int.from_bytes(key, "big"))


# -- interception -----------------------------------------------------------

class InterceptAction(str, Enum):
    PASS = "pass"
    MODIFIED = "modified"
    FABRICATED = "fabricated"


@dataclass(frozen=True)
class InterceptOutcome:
    action: InterceptAction
    original: Optional[TrafficEvent] = None
    injected: Optional[TrafficEvent] = None

    def __post_init__(self):
        if self.action is not InterceptAction.PASS and self.injected is None:
            raise ValueError(f"{self.action.value} outcome needs an injected event")

    @classmethod
    def passed(cls, event: TrafficEvent | None = None) -> "InterceptOutcome":
        return cls(InterceptAction.PASS, original=event)


PASS = InterceptOutcome(InterceptAction.PASS)

Interceptor = Callable[[TrafficEvent], Optional[InterceptOutcome]]


@dataclass
class Mitm:
    interceptor: str
    victims: frozenset[str]
    handler: Optional[Interceptor] = None


@dataclass
class Lan:
    id: str
    region: str = ""
    hosts: set[str] = field(default_factory=set)
    latency: int = 0
    mitm: Optional[Mitm] = None
    # LAN service registry: host -> service label (e.g. "bluespray-http")
    services: dict[str, str] = field(default_factory=dict)


class Host:
    """Base for anything that sends or answers traffic."""

    name: str = ""
    lan: Optional[str] = None

    def handle_request(self, sim: "Simulation", request: TrafficEvent) -> Optional[Mapping[str, Any]]:
        return None

    def on_response(self, sim: "Simulation", response: TrafficEvent) -> None:
        pass

    def start(self, sim: "Simulation") -> None:
        pass


@dataclass
class Handle:
    at: int
    seq: int
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


class Simulation:
    """Virtual clock plus FIFO-stable event queue and message routing."""

    def __init__(self, seed: int = 0, *, default_host: Host | None = None):
        self.seed = seed
        self.now = 0
        self.trace: list[TrafficEvent] = []
        self.hosts: dict[str, Host] = {}
        self.lans: dict[str, Lan] = {}
        self.default_host = default_host
        self._queue: list[tuple[int, int, Handle, Any]] = []
        self._seq = itertools.count()
        self._event_ids = itertools.count()
        self._session_ids = itertools.count(1)
        self._subscribers: list[Callable[[TrafficEvent], None]] = []
        self._host_lan: dict[str, str] = {}
        self._capture: Optional[dict[int, TrafficEvent]] = None

    # -- setup --------------------------------------------------------------

    def add_lan(self, lan: Lan) -> Lan:
        if lan.id in self.lans:
            raise TopologyError(f"duplicate LAN {lan.id!r}")
        self.lans[lan.id] = lan
        for h in lan.hosts:
            self._host_lan[h] = lan.id
        return lan

    def add_host(self, host: Host, lan: str | None = None) -> Host:
        if host.name in self.hosts:
            raise TopologyError(f"duplicate host {host.name!r}")
        self.hosts[host.name] = host
        if lan is not None:
            if lan not in self.lans:
                raise TopologyError(f"unknown LAN {lan!r}")
            self.lans[lan].hosts.add(host.name)
            self._host_lan[host.name] = lan
            host.lan = lan
        return host

    def start(self) -> None:
        for name in sorted(self.hosts):
            self.hosts[name].start(self)

    def lan_of(self, host: str) -> Optional[Lan]:
        lan_id = self._host_lan.get(host)
        return self.lans[lan_id] if lan_id is not None else None

    def stream(self, name: str) -> random.Random:
        return random_stream(self.seed, stream_id(name))

    def new_session(self) -> int:
        return next(self._session_ids)

    def subscribe(self, callback: Callable[[TrafficEvent], None]) -> Callable[[], None]:
        """Register a live tap on every recorded event; returns an unsubscribe."""
        self._subscribers.append(callback)

        def unsubscribe() -> None:
            if callback in self._subscribers:
                self._subscribers.remove(callback)

        return unsubscribe

    # -- clock and queue ----------------------------------------------------

    def schedule(self, action: Callable[[], Any] | TrafficEvent, at: int) -> Handle:
        """Run ``action`` when the clock reaches ``at``.

        A :class:`TrafficEvent` is sent via :meth:`send` at that time.
        """
        at = int(at)
        if at < self.now:
            raise SchedulingError(f"cannot schedule at {at} < now {self.now}")
        seq = next(self._seq)
        handle = Handle(at, seq)
        heapq.heappush(self._queue, (at, seq, handle, action))
        return handle

    def after(self, delay: int, action: Callable[[], Any] | TrafficEvent) -> Handle:
        return self.schedule(action, self.now + delay)

    def run_until(self, horizon: int) -> list[TrafficEvent]:
        """Process every action due at or before ``horizon``.

        Returns the events recorded during this call, in (time, insertion)
        order. The clock ends at ``horizon``.
        """
        if horizon < self.now:
            raise SchedulingError(f"horizon {horizon} is before now {self.now}")
        first = len(self.trace)
        queue = self._queue
        while queue and queue[0][0] <= horizon:
            at, _, handle, action = heapq.heappop(queue)
            if handle.cancelled:
                continue
            self.now = at
            if isinstance(action, TrafficEvent):
                self.send(action)
            else:
                action()
        self.now = horizon
        return self.trace[first:]

    @property
    def pending(self) -> int:
        return sum(1 for entry in self._queue if not entry[2].cancelled)

    # -- MITM ---------------------------------------------------------------

    def set_mitm(self, lan: Lan | str, interceptor: str, victims: Iterable[str],
                 handler: Interceptor | None = None) -> None:
        lan = self.lans[lan] if isinstance(lan, str) else lan
        victims = frozenset(victims)
        unknown = sorted(({interceptor} | victims) - lan.hosts)
        if unknown:
            raise TopologyError(f"hosts not on LAN {lan.id!r}: {', '.join(unknown)}")
        if interceptor in victims:
            raise TopologyError("interceptor cannot be its own victim")
        if lan.mitm is not None and lan.mitm.interceptor != interceptor:
            raise TopologyError(f"LAN {lan.id!r} already intercepted by {lan.mitm.interceptor!r}")
        lan.mitm = Mitm(interceptor, victims, handler) if victims else None

    def clear_mitm(self, lan: Lan | str) -> None:
        lan = self.lans[lan] if isinstance(lan, str) else lan
        lan.mitm = None

    def _mitm_for(self, host: str) -> Optional[Mitm]:
        lan = self.lan_of(host)
        if lan is None or lan.mitm is None or host not in lan.mitm.victims:
            return None
        return lan.mitm

    # -- traffic ------------------------------------------------------------

    def record(self, event: TrafficEvent) -> TrafficEvent:
        if not event.dst_host:
            raise ValueError("traffic event without destination")
        lan = event.lan
        if not lan:
            owner = self.lan_of(event.src) or self.lan_of(event.dst_host)
            lan = owner.id if owner else ""
        event = TrafficEvent(self.now, event.src, event.dst_host, event.method, event.path, event.payload,
                             event.direction, lan, next(self._event_ids), event.reply_to, event.session,
                             event.via)
        self.trace.append(event)
        for callback in list(self._subscribers):
            callback(event)
        return event

    def send(self, request: TrafficEvent) -> TrafficEvent:
        """Emit a request from ``request.src`` and route it.

        Returns the recorded request (with its event id).
        """
        request = self.record(request)
        mitm = self._mitm_for(request.src)
        outcome = self._intercept(mitm, request)
        if outcome.action is InterceptAction.FABRICATED:
            injected = replace(outcome.injected, reply_to=request.event_id, via=mitm.interceptor,
                               direction=Direction.RESPONSE, dst_host=request.src)
            self._deliver_response(injected, from_interceptor=True)
            return request
        if outcome.action is InterceptAction.MODIFIED:
            forwarded = self.record(replace(outcome.injected, via=mitm.interceptor))
        else:
            forwarded = request
        self._dispatch(request, forwarded)
        return request

    def _intercept(self, mitm: Optional[Mitm], event: TrafficEvent) -> InterceptOutcome:
        if mitm is None or mitm.handler is None:
            return PASS
        outcome = mitm.handler(event)
        return PASS if outcome is None else outcome

    def _dispatch(self, original: TrafficEvent, forwarded: TrafficEvent) -> None:
        target = self.hosts.get(forwarded.dst_host, self.default_host)
        if target is None:
            logger.debug("no endpoint for %s, dropping", forwarded.dst_host)
            return
        payload = target.handle_request(self, forwarded)
        if payload is None:
            return
        response = TrafficEvent(
            time=self.now, src=forwarded.dst_host, dst_host=original.src,
            method=forwarded.method, path=forwarded.path, payload=payload,
            direction=Direction.RESPONSE, reply_to=original.event_id,
            session=original.session,
        )
        lan = self.lan_of(original.src)
        delay = lan.latency if lan else 0
        if delay:
            self.schedule(lambda: self._deliver_response(response), self.now + delay)
        else:
            self._deliver_response(response)

    def exchange(self, request: TrafficEvent) -> Optional[TrafficEvent]:
        """Send ``request`` and return the response its sender received, if it
        arrived without delay."""
        previous, self._capture = self._capture, {}
        try:
            sent = self.send(request)
            return self._capture.get(sent.event_id)
        finally:
            self._capture = previous

    def _deliver_response(self, response: TrafficEvent, from_interceptor: bool = False) -> None:
        response = self.record(response)
        if not from_interceptor:
            mitm = self._mitm_for(response.dst_host)
            outcome = self._intercept(mitm, response)
            if outcome.action is not InterceptAction.PASS:
                response = self.record(replace(outcome.injected, via=mitm.interceptor,
                                               direction=Direction.RESPONSE,
                                               reply_to=response.reply_to))
        if self._capture is not None and response.reply_to is not None:
            self._capture[response.reply_to] = response
        target = self.hosts.get(response.dst_host)
        if target is not None:
            target.on_response(self, response)
