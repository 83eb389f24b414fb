"""RainMachine controller: weather-adaptive watering."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from ..netsim import Method, Simulation, TrafficEvent
from ..plans import DAY, PlanHistory, WateringPlan
from ..weather import WEATHER_HOST, WEATHER_PATH, ForecastError, WeatherForecast, LONDON
from .common import CLOUD_HOSTS, DEFAULT_SESSIONS, IrrigationDevice, IrrigationKind, SessionProfile, session_rng

logger = logging.getLogger(__name__)

MAX_PERCENTAGE = 1.5
POLL_PERIOD = 6 * 3600
HEARTBEAT_PATH = "/api/4/machine/heartbeat"


@dataclass(frozen=True)
class NeedModel:
    """Daily water deficit from forecast temperature and rain.

    Evapotranspiration is proxied as ``k * (T - t_ref)`` mm/day (zero below
    ``t_ref``); the deficit after rain is expressed as a fraction of the base
    plan's daily requirement ``base_need`` mm.
    """

    k: float = 0.25
    t_ref: float = 10.0
    base_need: float = 5.0

    def et0(self, temperature: float) -> float:
        return max(0.0, self.k * (temperature - self.t_ref))

    def percentage(self, temperature: float, rain: float) -> float:
        need = (self.et0(temperature) - rain) / self.base_need
        return min(MAX_PERCENTAGE, max(0.0, need))


@dataclass
class RainMachineState:
    host: str
    base_plan: WateringPlan
    location: tuple[float, float] = (LONDON.lat, LONDON.lon)
    forecast: Optional[WeatherForecast] = None
    percentages: dict[int, float] = field(default_factory=dict)
    poll_period: int = POLL_PERIOD
    model: NeedModel = field(default_factory=NeedModel)
    history: PlanHistory = field(default_factory=PlanHistory)

    def effective_plans(self) -> tuple[WateringPlan, ...]:
        plans = []
        base = self.base_plan
        for day, p in sorted(self.percentages.items()):
            if p <= 0:
                continue
            lo, hi = max(base.start, day * DAY), min(base.end, (day + 1) * DAY)
            if lo >= hi:
                continue
            windows = tuple((o, min(round(p * d), DAY - o)) for o, d in base.schedule)
            windows = tuple(w for w in windows if w[1] > 0)
            if windows:
                plans.append(WateringPlan(base.zones, lo, hi, windows))
        return tuple(plans)

    def base_daily_seconds(self) -> int:
        return sum(d for _, d in self.base_plan.schedule)


def rainmachine_adapt(state: RainMachineState, forecast: WeatherForecast) -> dict[int, float]:
    """Per-day watering percentage for every day the forecast covers.

    The result is merged into ``state.percentages``; an empty forecast leaves
    the previous percentages untouched.
    """
    daily = forecast.daily()
    if not daily:
        return {}
    out = {day: state.model.percentage(t_mean, rain) for day, (t_mean, rain) in daily.items()}
    state.forecast = forecast
    state.percentages.update(out)
    return out


def rainmachine_poll(state: RainMachineState, now: int) -> TrafficEvent:
    lat, lon = state.location
    return TrafficEvent(now, state.host, WEATHER_HOST, Method.GET, WEATHER_PATH,
                        {"lat": lat, "lon": lon})


def rainmachine_on_forecast(state: RainMachineState, response: TrafficEvent, now: int) -> bool:
    # the reply's coordinates are deliberately not compared with the request
    try:
        forecast = WeatherForecast.from_payload(response.payload)
    except ForecastError as exc:
        logger.warning("%s: forecast ignored: %s", state.host, exc)
        return False
    if not rainmachine_adapt(state, forecast):
        return False
    state.history.set(now, state.effective_plans())
    return True


class RainMachineDevice(IrrigationDevice):
    kind = IrrigationKind.RAINMACHINE

    def __init__(self, name: str, *, base_plan: WateringPlan,
                 location: tuple[float, float] = (LONDON.lat, LONDON.lon),
                 model: NeedModel | None = None, sessions: SessionProfile | None = None,
                 zone_flow: float | None = None):
        self.name = name
        self.state = RainMachineState(name, base_plan, location, model=model or NeedModel())
        self.sessions = sessions or DEFAULT_SESSIONS[IrrigationKind.RAINMACHINE]
        if zone_flow is not None:
            self.zone_flow = zone_flow

    def start(self, sim: Simulation) -> None:
        self._rng = session_rng(sim, self.name)
        self._gaps = self.sessions.gaps(self._rng)
        sim.schedule(lambda: self._poll(sim), sim.now + 1 + self._rng.randrange(self.state.poll_period))
        sim.schedule(lambda: self._heartbeat(sim), sim.now + self._rng.randrange(self.sessions.first_max))

    def _poll(self, sim: Simulation) -> None:
        event = rainmachine_poll(self.state, sim.now)
        sim.send(TrafficEvent(event.time, event.src, event.dst_host, event.method, event.path,
                              event.payload, session=sim.new_session()))
        sim.schedule(lambda: self._poll(sim), sim.now + self.state.poll_period)

    def _heartbeat(self, sim: Simulation) -> None:
        sim.send(TrafficEvent(sim.now, self.name, CLOUD_HOSTS[self.kind][0], Method.POST,
                              HEARTBEAT_PATH, {"device": self.name}, session=sim.new_session()))
        sim.schedule(lambda: self._heartbeat(sim), sim.now + next(self._gaps))

    def on_response(self, sim: Simulation, response: TrafficEvent) -> None:
        if response.path == WEATHER_PATH:
            rainmachine_on_forecast(self.state, response, sim.now)

    def zone_windows(self, a: int, b: int) -> dict[int, list[tuple[int, int]]]:
        return self.state.history.zone_windows(a, b)
