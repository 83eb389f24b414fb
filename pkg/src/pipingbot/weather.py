"""Hourly forecasts and a simulated Met.no-style forecast service."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

from .netsim import Host, Simulation, TrafficEvent
from .plans import DAY, HOUR

WEATHER_HOST = "api.met.no"
WEATHER_PATH = "/weatherapi/locationforecast/1.9/"
FORECAST_DAYS = 7


class ForecastError(ValueError):
    pass


@dataclass(frozen=True)
class HourlyWeather:
    time: int
    temperature: float
    precipitation: float
    humidity: float
    wind_speed: float
    cloudiness: float


@dataclass(frozen=True)
class WeatherForecast:
    location: tuple[float, float]
    entries: tuple[HourlyWeather, ...]

    def __post_init__(self):
        times = [e.time for e in self.entries]
        if any(b - a != HOUR for a, b in zip(times, times[1:])):
            raise ForecastError("forecast entries must be hourly and sorted")
        for e in self.entries:
            if not (0 <= e.humidity <= 100 and 0 <= e.cloudiness <= 100):
                raise ForecastError(f"humidity/cloudiness out of range at {e.time}")
            if e.precipitation < 0:
                raise ForecastError(f"negative precipitation at {e.time}")

    def daily(self) -> dict[int, tuple[float, float]]:
        """Day index -> (mean temperature, total precipitation)."""
        acc: dict[int, list[HourlyWeather]] = {}
        for e in self.entries:
            acc.setdefault(e.time // DAY, []).append(e)
        return {d: (sum(e.temperature for e in es) / len(es), sum(e.precipitation for e in es))
                for d, es in sorted(acc.items())}

    def to_payload(self) -> dict:
        return {
            "location": {"lat": self.location[0], "lon": self.location[1]},
            "entries": [
                {"time": e.time, "temperature": e.temperature, "precipitation": e.precipitation,
                 "humidity": e.humidity, "wind_speed": e.wind_speed, "cloudiness": e.cloudiness}
                for e in self.entries
            ],
        }

    @classmethod
    def from_payload(cls, doc: Mapping[str, Any]) -> "WeatherForecast":
        try:
            loc = doc["location"]
            entries = tuple(
                HourlyWeather(int(e["time"]), float(e["temperature"]), float(e["precipitation"]),
                              float(e["humidity"]), float(e["wind_speed"]), float(e["cloudiness"]))
                for e in doc["entries"]
            )
            return cls((float(loc["lat"]), float(loc["lon"])), entries)
        except (KeyError, TypeError, ValueError) as exc:
            raise ForecastError(f"malformed forecast document: {exc}") from exc


@dataclass(frozen=True)
class Climate:
    """Repeating daily (min temp, max temp, rain mm) pattern for a place."""

    name: str
    lat: float
    lon: float
    days: tuple[tuple[float, float, float], ...]
    wind_speed: float = 4.0

    def hour(self, t: int) -> HourlyWeather:
        tmin, tmax, rain = self.days[(t // DAY) % len(self.days)]
        hour_of_day = (t % DAY) / HOUR
        # coldest at 03:00, warmest at 15:00
        temp = tmin + (tmax - tmin) * (1 - math.cos((hour_of_day - 3) * math.pi / 12)) / 2
        wet = rain > 0
        return HourlyWeather(t, round(temp, 3), round(rain / 24, 6),
                             85.0 if wet else 20.0, self.wind_speed, 80.0 if wet else 5.0)

    def forecast(self, now: int, days: int = FORECAST_DAYS,
                 location: tuple[float, float] | None = None) -> WeatherForecast:
        first = (now // HOUR) * HOUR
        entries = tuple(self.hour(first + i * HOUR) for i in range(days * 24))
        return WeatherForecast(location or (self.lat, self.lon), entries)


LONDON = Climate("london-winter", 51.5074, -0.1278,
                 ((-1, 6, 2.5), (1, 8, 4.0), (3, 12, 1.5), (2, 10, 3.0),
                  (0, 7, 5.0), (-1, 9, 2.0), (4, 11, 3.5)))
# In Salah, Algeria
ALGERIA = Climate("algeria-arid", 27.1950, 2.4833,
                  ((29, 46, 0), (30, 47, 0), (31, 48, 0), (30, 46, 0),
                   (28, 45, 0), (29, 47, 0), (31, 48, 0)), wind_speed=6.0)
# wetter than London, used for "rainier location" spoofs
BERGEN = Climate("bergen-wet", 60.3913, 5.3221,
                 ((0, 5, 12.0), (1, 6, 15.0), (2, 7, 10.0), (0, 4, 18.0),
                  (1, 5, 14.0), (2, 6, 11.0), (1, 6, 16.0)))
DEFAULT_CLIMATES = (LONDON, ALGERIA, BERGEN)


@dataclass
class WeatherService(Host):
    """Answers forecast queries for the nearest known climate."""

    name: str = WEATHER_HOST
    climates: Sequence[Climate] = field(default_factory=lambda: DEFAULT_CLIMATES)
    requests: int = 0

    def nearest(self, lat: float, lon: float) -> Climate:
        return min(self.climates, key=lambda c: (c.lat - lat) ** 2 + (c.lon - lon) ** 2)

    def handle_request(self, sim: Simulation, request: TrafficEvent) -> Optional[dict]:
        self.requests += 1
        try:
            lat, lon = float(request.payload["lat"]), float(request.payload["lon"])
        except (KeyError, TypeError, ValueError):
            return {"error": "missing coordinates"}
        return self.nearest(lat, lon).forecast(sim.now, location=(lat, lon)).to_payload()


def rescale_temperatures(forecast: WeatherForecast, band: tuple[float, float],
                         rain: float | None = None) -> WeatherForecast:
    """Affinely map the forecast's temperature range onto ``band``; optionally
    replace every hourly precipitation value with ``rain``."""
    lo, hi = band
    temps = [e.temperature for e in forecast.entries]
    if not temps:
        return forecast
    tmin, tmax = min(temps), max(temps)
    span = tmax - tmin
    entries = []
    identity = (lo, hi) == (tmin, tmax)
    for e in forecast.entries:
        if identity:
            t = e.temperature
        else:
            t = lo + (e.temperature - tmin) * (hi - lo) / span if span else (lo + hi) / 2
        p = e.precipitation if rain is None else float(rain)
        entries.append(replace(e, temperature=t, precipitation=p))
    return replace(forecast, entries=tuple(entries))
