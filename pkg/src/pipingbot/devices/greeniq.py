"""GreenIQ controller: minute-by-minute cloud polling and GPIO valves."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from ..netsim import Host, Method, Simulation, TrafficEvent
from ..plans import PlanError, PlanHistory, ValveLog, WateringPlan, combine_windows
from .common import DEFAULT_SESSIONS, IrrigationDevice, IrrigationKind, SessionProfile, session_rng

logger = logging.getLogger(__name__)

GREENIQ_HOST = "www.greeniq.net"
PING_PATH = "/php/ping_to_cloud.php"
CONFIG_PATH = "/php/api/v2/hub/configxml.php"
VALVES = 8
ALL_CLOSED = "0" * VALVES


class ValveError(ValueError):
    pass


@dataclass
class GreenIqState:
    host: str
    user_id: str = ""
    current_config: int = 0
    plans: tuple[WateringPlan, ...] = ()
    valves: str = ALL_CLOSED
    ping_period: int = 60
    ssh_enabled: bool = True
    pending: Optional[int] = None
    history: PlanHistory = field(default_factory=PlanHistory)
    valve_log: ValveLog = field(default_factory=ValveLog)
    accepted_updates: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.user_id = self.user_id or self.host
        if self.plans and not self.history.current:
            self.history.set(0, self.plans)

    def adopt(self, now: int, timestamp: int, plans: Sequence[WateringPlan]) -> None:
        self.plans = tuple(plans)
        self.current_config = timestamp
        self.history.set(now, self.plans)
        self.accepted_updates.append(timestamp)


def config_document(plans: Sequence[WateringPlan]) -> dict:
    """One row per (zone, daily window) as carried in the configxml reply."""
    rows = []
    for plan in plans:
        for offset, duration in plan.schedule:
            for zone in plan.zones:
                rows.append({"zone": zone, "start": plan.start, "end": plan.end,
                             "daily_offset": offset, "duration": duration})
    return {"plans": rows}


def parse_config_document(doc: Mapping[str, Any], zone_count: int = VALVES) -> tuple[WateringPlan, ...]:
    try:
        rows = doc["plans"]
        groups: dict[tuple[int, int, int, int], list[int]] = {}
        for row in rows:
            key = (int(row["start"]), int(row["end"]), int(row["daily_offset"]), int(row["duration"]))
            groups.setdefault(key, []).append(int(row["zone"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(f"malformed config document: {exc}") from exc
    return tuple(
        WateringPlan(tuple(zones), s, e, ((o, d),)).validate(zone_count)
        for (s, e, o, d), zones in sorted(groups.items())
    )


def greeniq_step(state: GreenIqState, now: int, session: int | None = None) -> list[TrafficEvent]:
    """The once-a-minute ping asking the cloud for the last update time."""
    return [TrafficEvent(now, state.host, GREENIQ_HOST, Method.POST, PING_PATH,
                         {"user_id": state.user_id}, session=session)]


def greeniq_on_response(state: GreenIqState, response: TrafficEvent, now: int) -> list[TrafficEvent]:
    """Advance the polling state machine; returns follow-up requests."""
    if response.path == PING_PATH:
        try:
            new_config = int(response.payload["timestamp"])
        except (KeyError, TypeError, ValueError):
            logger.warning("%s: malformed ping response ignored", state.host)
            return []
        # strictly greater: an equal timestamp is not an update
        if new_config > state.current_config:
            state.pending = new_config
            return [TrafficEvent(now, state.host, GREENIQ_HOST, Method.GET, CONFIG_PATH,
                                 {"user_id": state.user_id}, session=response.session)]
        return []
    if response.path == CONFIG_PATH:
        if state.pending is None:
            return []
        try:
            plans = parse_config_document(response.payload)
        except PlanError as exc:
            logger.warning("%s: config rejected: %s", state.host, exc)
            state.pending = None
            return []
        state.adopt(now, state.pending, plans)
        state.pending = None
    return []


def greeniq_valve_exec(state: GreenIqState, bitstring: str, now: int = 0) -> None:
    """Drive the GPIO valve outputs directly (what an SSH session can do)."""
    if len(bitstring) != VALVES or set(bitstring) - {"0", "1"}:
        raise ValveError(f"valve bitstring must be {VALVES} binary digits, got {bitstring!r}")
    state.valves = bitstring
    state.valve_log.set(now, bitstring)


def factory_reset(state: GreenIqState, now: int) -> None:
    state.current_config = 0
    state.pending = None
    state.plans = ()
    state.history.set(now, ())
    greeniq_valve_exec(state, ALL_CLOSED, now)


class GreenIqDevice(IrrigationDevice):
    kind = IrrigationKind.GREENIQ

    def __init__(self, name: str, *, plans: Sequence[WateringPlan] = (), ssh_enabled: bool = True,
                 sessions: SessionProfile | None = None, zone_flow: float | None = None):
        self.name = name
        self.state = GreenIqState(host=name, plans=tuple(plans), ssh_enabled=ssh_enabled)
        self.sessions = sessions or DEFAULT_SESSIONS[IrrigationKind.GREENIQ]
        if zone_flow is not None:
            self.zone_flow = zone_flow
        self._session: int | None = None
        self._next_session_at = 0

    def start(self, sim: Simulation) -> None:
        self._rng = session_rng(sim, self.name)
        self._gaps = self.sessions.gaps(self._rng)
        # first tick lands in (0, period]: a device never pings at the instant it boots
        first = 1 + self._rng.randrange(min(self.sessions.first_max, self.state.ping_period))
        sim.schedule(lambda: self._tick(sim), sim.now + first)

    def _tick(self, sim: Simulation) -> None:
        if self._session is None or sim.now >= self._next_session_at:
            self._session = sim.new_session()
            self._next_session_at = sim.now + next(self._gaps)
        for event in greeniq_step(self.state, sim.now, self._session):
            sim.send(event)
        sim.schedule(lambda: self._tick(sim), sim.now + self.state.ping_period)

    def on_response(self, sim: Simulation, response: TrafficEvent) -> None:
        for event in greeniq_on_response(self.state, response, sim.now):
            sim.send(event)

    def handle_request(self, sim: Simulation, request: TrafficEvent) -> Optional[dict]:
        if request.method is Method.SSH_EXEC:
            if not self.state.ssh_enabled:
                return {"status": "refused"}
            try:
                greeniq_valve_exec(self.state, str(request.payload.get("bits", "")), sim.now)
            except ValveError as exc:
                return {"status": "error", "reason": str(exc)}
            return {"status": "ok", "valves": self.state.valves}
        return None

    def zone_windows(self, a: int, b: int) -> dict[int, list[tuple[int, int]]]:
        return combine_windows(self.state.history.zone_windows(a, b),
                               self.state.valve_log.zone_windows(a, b))


@dataclass
class GreenIqCloud(Host):
    """Stores each user's plan updates and answers the device's polling."""

    name: str = GREENIQ_HOST
    updates: dict[str, list[tuple[int, tuple[WateringPlan, ...]]]] = field(default_factory=dict)
    pings: int = 0

    def user_update(self, user_id: str, t: int, plans: Sequence[WateringPlan]) -> None:
        self.updates.setdefault(user_id, []).append((t, tuple(plans)))
        self.updates[user_id].sort(key=lambda u: u[0])

    def latest(self, user_id: str, now: int) -> tuple[int, tuple[WateringPlan, ...]]:
        best = (0, ())
        for t, plans in self.updates.get(user_id, ()):
            if t <= now:
                best = (t, plans)
        return best

    def handle_request(self, sim: Simulation, request: TrafficEvent) -> Optional[dict]:
        user = str(request.payload.get("user_id", request.src))
        if request.path == PING_PATH:
            self.pings += 1
            return {"timestamp": self.latest(user, sim.now)[0]}
        if request.path == CONFIG_PATH:
            return config_document(self.latest(user, sim.now)[1])
        return {"status": "ok"}
