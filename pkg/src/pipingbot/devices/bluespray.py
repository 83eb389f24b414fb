"""BlueSpray controller: LAN web interface that accepts schedules from anyone."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..netsim import Method, Simulation, TrafficEvent, payload_digest
from ..plans import PlanError, PlanHistory, WateringPlan
from .common import CLOUD_HOSTS, DEFAULT_SESSIONS, IrrigationDevice, IrrigationKind, SessionProfile, session_rng

SCHEDULE_PATH = "/api/schedule"
DELETE_PATH = "/api/delete"
PLANS_PATH = "/api/plans"
STATUS_PATH = "/api/v1/status"
SERVICE_LABEL = "bluespray-http"


@dataclass
class BlueSprayState:
    host: str
    plans: dict[str, WateringPlan] = field(default_factory=dict)
    zone_count: int = 8
    auth_required: bool = False
    history: PlanHistory = field(default_factory=PlanHistory)

    def __post_init__(self):
        if self.auth_required:
            raise ValueError("BlueSpray firmware has no authentication")
        if not 4 <= self.zone_count <= 24:
            raise ValueError("zone count must be within 4..24")


def plan_key(doc: dict) -> str:
    return str(doc["id"]) if doc.get("id") is not None else payload_digest(
        {k: doc[k] for k in ("zones", "start", "end", "schedule")})


def schedule_payload(plans: list[WateringPlan], ids: list[str] | None = None) -> dict:
    docs = []
    for i, plan in enumerate(plans):
        doc = plan.to_dict()
        if ids is not None:
            doc["id"] = ids[i]
        docs.append(doc)
    return {"plans": docs}


def bluespray_handle(state: BlueSprayState, request: TrafficEvent, now: int | None = None) -> TrafficEvent:
    """Serve one request on the local web interface.

    No credentials are checked; a schedule upserts plans keyed by id (or by
    content), so replaying the same request leaves the same plan set.
    """
    now = request.time if now is None else now

    def reply(payload: dict) -> TrafficEvent:
        return request.response(payload, time=now)

    if request.path == PLANS_PATH:
        return reply({"status": "ok", "plans": {k: p.to_dict() for k, p in state.plans.items()}})
    if request.path == SCHEDULE_PATH:
        try:
            docs = list(request.payload["plans"])
            staged = {plan_key(doc): WateringPlan.from_dict(doc).validate(state.zone_count) for doc in docs}
        except (KeyError, TypeError, PlanError) as exc:
            return reply({"status": "error", "reason": str(exc)})
        state.plans.update(staged)
    elif request.path == DELETE_PATH:
        ids = request.payload.get("ids")
        if not isinstance(ids, list):
            return reply({"status": "error", "reason": "ids must be a list"})
        for key in ids:
            state.plans.pop(str(key), None)
    else:
        return reply({"status": "error", "reason": f"unknown path {request.path}"})
    state.history.set(now, tuple(state.plans[k] for k in sorted(state.plans)))
    return reply({"status": "ok", "plans": len(state.plans)})


class BlueSprayDevice(IrrigationDevice):
    kind = IrrigationKind.BLUESPRAY

    def __init__(self, name: str, *, plans: list[WateringPlan] = (), zone_count: int = 8,
                 sessions: SessionProfile | None = None, zone_flow: float | None = None):
        self.name = name
        self.state = BlueSprayState(name, zone_count=zone_count)
        for plan in plans:
            plan.validate(zone_count)
            self.state.plans[payload_digest(plan.to_dict())] = plan
        self.state.history.set(0, tuple(self.state.plans[k] for k in sorted(self.state.plans)))
        self.sessions = sessions or DEFAULT_SESSIONS[IrrigationKind.BLUESPRAY]
        if zone_flow is not None:
            self.zone_flow = zone_flow

    def start(self, sim: Simulation) -> None:
        self._rng = session_rng(sim, self.name)
        self._gaps = self.sessions.gaps(self._rng)
        lan = sim.lan_of(self.name)
        if lan is not None:
            lan.services[self.name] = SERVICE_LABEL
        sim.schedule(lambda: self._heartbeat(sim), sim.now + self._rng.randrange(self.sessions.first_max))

    def _heartbeat(self, sim: Simulation) -> None:
        host = self._rng.choice(CLOUD_HOSTS[self.kind])
        sim.send(TrafficEvent(sim.now, self.name, host, Method.POST, STATUS_PATH,
                              {"device": self.name}, session=sim.new_session()))
        sim.schedule(lambda: self._heartbeat(sim), sim.now + next(self._gaps))

    def handle_request(self, sim: Simulation, request: TrafficEvent) -> Optional[dict]:
        if request.method is not Method.LOCAL_HTTP:
            return None
        return dict(bluespray_handle(self.state, request, sim.now).payload)

    def zone_windows(self, a: int, b: int) -> dict[int, list[tuple[int, int]]]:
        return self.state.history.zone_windows(a, b)
