"""Attack engines a bot runs from its MITM position or plain LAN access."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Optional

from .devices.bluespray import DELETE_PATH, SCHEDULE_PATH, SERVICE_LABEL, schedule_payload
from .devices.greeniq import ALL_CLOSED, CONFIG_PATH, GREENIQ_HOST, PING_PATH, VALVES, GreenIqDevice, config_document
from .netsim import (Handle, InterceptAction, InterceptOutcome, Method, Simulation, TrafficEvent)
from .plans import WateringPlan
from .weather import WEATHER_HOST, WEATHER_PATH, ForecastError, WeatherForecast, rescale_temperatures

logger = logging.getLogger(__name__)

SCENARIO_EPOCH_UNIX = 1_527_811_200  # 2018-06-01T00:00:00Z
YEAR_2022 = 1_640_995_200 - SCENARIO_EPOCH_UNIX
MASTER_OPEN = "1" + "0" * (VALVES - 1)
PASS = InterceptOutcome(InterceptAction.PASS)


class AttackKind(str, Enum):
    SPOOF_CONFIG = "SpoofConfig"
    PERMANENT_DOS = "PermanentDoS"
    WEATHER_VALUE = "WeatherValueSpoof"
    WEATHER_LOCATION = "WeatherLocationSpoof"
    SCHEDULE_REPLAY = "ScheduleReplay"
    VALVE_TOGGLE = "ValveToggle"


@dataclass(frozen=True)
class AttackDirective:
    kind: AttackKind
    start: int
    end: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.start >= self.end:
            raise ValueError(f"directive start {self.start} not before end {self.end}")
        if self.kind is AttackKind.VALVE_TOGGLE and int(self.params.get("period", 10)) <= 0:
            raise ValueError("valve toggle period must be positive")


def _fabricate(packet: TrafficEvent, payload: dict) -> InterceptOutcome:
    return InterceptOutcome(InterceptAction.FABRICATED, original=packet,
                            injected=packet.response(payload, src=packet.dst_host))


def spoof_configuration(packet: TrafficEvent, start: int, end: int, *, latch: int | None = None,
                        zones: Iterable[int] = range(1, VALVES + 1)) -> InterceptOutcome:
    """Answer GreenIQ's cloud polling in the cloud's place.

    A ping is answered with timestamp ``latch`` (default ``end``), which the
    device takes as a fresh user update; the configxml fetch that follows is
    answered with a plan watering every zone continuously over
    ``[start, end)``. Everything else passes.
    """
    if not packet.is_request or packet.dst_host != GREENIQ_HOST:
        return PASS
    if packet.method is Method.POST and packet.path == PING_PATH:
        return _fabricate(packet, {"timestamp": end if latch is None else latch})
    if packet.method is Method.GET and packet.path == CONFIG_PATH:
        return _fabricate(packet, config_document([WateringPlan.continuous(zones, start, end)]))
    return PASS


def spoof_weather_values(packet: TrafficEvent, band: tuple[float, float],
                         rain: float | None = None) -> InterceptOutcome:
    """Rewrite a forecast reply: temperatures rescaled into ``band``, hourly
    precipitation replaced by ``rain`` when given."""
    if packet.is_request or packet.src != WEATHER_HOST or packet.path != WEATHER_PATH:
        return PASS
    try:
        forecast = WeatherForecast.from_payload(packet.payload)
    except ForecastError as exc:
        logger.warning("forecast spoof skipped: %s", exc)
        return PASS
    forged = rescale_temperatures(forecast, band, rain)
    return InterceptOutcome(InterceptAction.MODIFIED, original=packet,
                            injected=replace(packet, payload=forged.to_payload()))


def spoof_weather_location(packet: TrafficEvent, fake: tuple[float, float]) -> InterceptOutcome:
    """Move a forecast request to other coordinates before it leaves the LAN."""
    if not packet.is_request or packet.dst_host != WEATHER_HOST or packet.path != WEATHER_PATH:
        return PASS
    if "lat" not in packet.payload or "lon" not in packet.payload:
        return PASS
    payload = dict(packet.payload, lat=float(fake[0]), lon=float(fake[1]))
    return InterceptOutcome(InterceptAction.MODIFIED, original=packet,
                            injected=replace(packet, payload=payload))


def replay_schedule(sim: Simulation, bot: str, target: str, plan: WateringPlan,
                    plan_id: str | None = None) -> bool:
    """Push a plan to a BlueSpray's web interface with no credentials."""
    lan = sim.lan_of(bot)
    if lan is None or target not in lan.hosts or lan.services.get(target) != SERVICE_LABEL:
        return False
    ids = None if plan_id is None else [plan_id]
    reply = sim.exchange(TrafficEvent(sim.now, bot, target, Method.LOCAL_HTTP, SCHEDULE_PATH,
                                      schedule_payload([plan], ids), session=sim.new_session()))
    return reply is not None and reply.payload.get("status") == "ok"


def delete_schedule(sim: Simulation, bot: str, target: str, plan_ids: list[str]) -> bool:
    reply = sim.exchange(TrafficEvent(sim.now, bot, target, Method.LOCAL_HTTP, DELETE_PATH,
                                      {"ids": list(plan_ids)}, session=sim.new_session()))
    return reply is not None and reply.payload.get("status") == "ok"


def ssh_exec(sim: Simulation, bot: str, target: str, bits: str) -> bool:
    reply = sim.exchange(TrafficEvent(sim.now, bot, target, Method.SSH_EXEC, "set_gpio",
                                      {"bits": bits}, session=sim.new_session()))
    return reply is not None and reply.payload.get("status") == "ok"


@dataclass
class ToggleRun:
    """Pending valve commands of one toggle attack."""

    ok: bool
    handles: list[Handle] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok

    def cancel(self, sim: Simulation, bot: str, target: str) -> None:
        pending = [h for h in self.handles if not h.cancelled and h.at >= sim.now]
        for h in self.handles:
            h.cancel()
        if pending:
            ssh_exec(sim, bot, target, ALL_CLOSED)


def valve_toggle(sim: Simulation, bot: str, target: str, period: int, duration: int,
                 bits_open: str = MASTER_OPEN) -> ToggleRun:
    """Open and close the master valve every ``period`` seconds for ``duration``.

    Open windows are ``[k*period, (k+1)*period)`` for even ``k``, clipped to
    the duration; the valves are closed at the end.
    """
    if period <= 0:
        raise ValueError("toggle period must be positive")
    if not isinstance(sim.hosts.get(target), GreenIqDevice):
        return ToggleRun(False)
    if duration <= 0:
        return ToggleRun(True)
    t0 = sim.now
    if not ssh_exec(sim, bot, target, bits_open):
        return ToggleRun(False)
    run = ToggleRun(True)
    steps = math.ceil(duration / period)
    for k in range(1, steps):
        bits = bits_open if k % 2 == 0 else ALL_CLOSED
        run.handles.append(sim.schedule(lambda b=bits: ssh_exec(sim, bot, target, b), t0 + k * period))
    if steps % 2 == 1:
        # the last window is an open one; close it when the attack ends
        run.handles.append(sim.schedule(lambda: ssh_exec(sim, bot, target, ALL_CLOSED), t0 + duration))
    return run


# -- runners: one directive against one target, driven by the bot ----------

class DirectiveRunner:
    """Carries out a directive against one device.

    ``intercept`` is consulted for the target's traffic while the runner is
    active; ``stop`` is the C&C STOP (or the natural end of the window).
    """

    def __init__(self, directive: AttackDirective, bot: str, target: str):
        self.directive = directive
        self.bot = bot
        self.target = target
        self.active = False
        self.ok = True

    def activate(self, sim: Simulation) -> None:
        self.active = True

    def intercept(self, event: TrafficEvent) -> Optional[InterceptOutcome]:
        return None

    def stop(self, sim: Simulation) -> None:
        self.active = False


class ConfigInjection(DirectiveRunner):
    """Watering-plan injection, optionally latching a far-future timestamp."""

    def __init__(self, directive: AttackDirective, bot: str, target: str):
        super().__init__(directive, bot, target)
        p = directive.params
        self.zones = tuple(p.get("zones", range(1, VALVES + 1)))
        self.plan_end = directive.end
        if directive.kind is AttackKind.PERMANENT_DOS:
            self.latch = int(p.get("latch", YEAR_2022))
        else:
            self.latch = directive.end
        self.served = False
        self.truncating = False

    def intercept(self, event: TrafficEvent) -> Optional[InterceptOutcome]:
        if event.src != self.target:
            return None
        outcome = spoof_configuration(event, self.directive.start, self.plan_end,
                                      latch=self.latch, zones=self.zones)
        if outcome.action is InterceptAction.FABRICATED and event.path == CONFIG_PATH:
            self.served = True
            if self.truncating:
                self.truncating = False
                self.active = False
        return outcome

    def stop(self, sim: Simulation) -> None:
        if self.served and sim.now < self.plan_end:
            # the device only re-reads its plan on a newer timestamp
            self.latch += 1
            self.plan_end = max(sim.now, self.directive.start + 1)
            self.truncating = True
        else:
            self.active = False


class WeatherValueSpoof(DirectiveRunner):
    def intercept(self, event: TrafficEvent) -> Optional[InterceptOutcome]:
        if event.dst_host != self.target:
            return None
        p = self.directive.params
        band = tuple(p.get("band", (0.0, 50.0)))
        return spoof_weather_values(event, band, p.get("rain", 0.0))


class WeatherLocationSpoof(DirectiveRunner):
    def intercept(self, event: TrafficEvent) -> Optional[InterceptOutcome]:
        if event.src != self.target:
            return None
        fake = tuple(self.directive.params.get("fake", (27.1950, 2.4833)))
        return spoof_weather_location(event, fake)


class ScheduleReplay(DirectiveRunner):
    def activate(self, sim: Simulation) -> None:
        super().activate(sim)
        device = sim.hosts.get(self.target)
        zone_count = getattr(getattr(device, "state", None), "zone_count", VALVES)
        zones = tuple(self.directive.params.get("zones", range(1, zone_count + 1)))
        self.plan_id = f"{self.bot}@{self.directive.start}"
        plan = WateringPlan.continuous(zones, self.directive.start, self.directive.end)
        self.ok = replay_schedule(sim, self.bot, self.target, plan, self.plan_id)

    def stop(self, sim: Simulation) -> None:
        if self.ok and self.active and sim.now < self.directive.end:
            delete_schedule(sim, self.bot, self.target, [self.plan_id])
        self.active = False


class ValveToggle(DirectiveRunner):
    def activate(self, sim: Simulation) -> None:
        super().activate(sim)
        period = int(self.directive.params.get("period", 10))
        self.run = valve_toggle(sim, self.bot, self.target, period,
                                self.directive.end - self.directive.start)
        self.ok = bool(self.run)

    def stop(self, sim: Simulation) -> None:
        if self.active and self.ok:
            self.run.cancel(sim, self.bot, self.target)
        self.active = False


RUNNERS = {
    AttackKind.SPOOF_CONFIG: ConfigInjection,
    AttackKind.PERMANENT_DOS: ConfigInjection,
    AttackKind.WEATHER_VALUE: WeatherValueSpoof,
    AttackKind.WEATHER_LOCATION: WeatherLocationSpoof,
    AttackKind.SCHEDULE_REPLAY: ScheduleReplay,
    AttackKind.VALVE_TOGGLE: ValveToggle,
}


def runner_for(directive: AttackDirective, bot: str, target: str) -> DirectiveRunner:
    return RUNNERS[directive.kind](directive, bot, target)
