"""Non-irrigation LAN devices used as detection negatives."""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

from ..netsim import Host, Method, Simulation, TrafficEvent
from ..plans import HOUR
from .common import CLOUD_HOSTS


class DeviceClass(str, Enum):
    BULB = "bulb"
    REFRIGERATOR = "refrigerator"
    CAMERA = "camera"
    LAPTOP = "laptop"
    SMARTPHONE = "smartphone"
    SMARTWATCH = "smartwatch"


@dataclass(frozen=True)
class BackgroundProfile:
    device_class: DeviceClass
    destinations: tuple[str, ...]
    sessions_per_hour: tuple[int, int]
    unique_destinations_mean: float
    unique_destinations_sd: float = 1.0

    def __post_init__(self):
        clash = set(self.destinations) & {h for hosts in CLOUD_HOSTS.values() for h in hosts}
        if clash:
            raise ValueError(f"background pool overlaps irrigation cloud hosts: {sorted(clash)}")


def _pool(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}.example.net" for i in range(1, n + 1))


# qualitative ordering only: smartphone > laptop > refrigerator > watch > camera > bulb
DEFAULT_PROFILES: Mapping[DeviceClass, BackgroundProfile] = {
    DeviceClass.BULB: BackgroundProfile(DeviceClass.BULB, _pool("bulb-api", 3), (2, 6), 1.5, 0.5),
    DeviceClass.REFRIGERATOR: BackgroundProfile(DeviceClass.REFRIGERATOR, _pool("fridge-svc", 20), (12, 24), 9.0, 2.0),
    DeviceClass.CAMERA: BackgroundProfile(DeviceClass.CAMERA, _pool("cam-relay", 8), (10, 20), 3.0, 1.0),
    DeviceClass.LAPTOP: BackgroundProfile(DeviceClass.LAPTOP, _pool("web", 50), (30, 60), 18.0, 3.0),
    DeviceClass.SMARTPHONE: BackgroundProfile(DeviceClass.SMARTPHONE, _pool("app", 60), (40, 80), 24.0, 3.0),
    DeviceClass.SMARTWATCH: BackgroundProfile(DeviceClass.SMARTWATCH, _pool("wear-sync", 12), (8, 16), 5.0, 1.0),
}


def background_step(profile: BackgroundProfile, rng: random.Random, now: int,
                    host: str = "", lan: str = "",
                    new_session: Callable[[], int] | None = None) -> list[TrafficEvent]:
    """One hour of sessions starting at ``now``, sorted by time."""
    pool = sorted(profile.destinations)
    if not pool:
        return []
    unique = round(rng.gauss(profile.unique_destinations_mean, profile.unique_destinations_sd))
    unique = max(1, min(len(pool), unique))
    sessions = max(unique, rng.randint(*profile.sessions_per_hour))
    chosen = rng.sample(pool, unique)
    dests = chosen + [rng.choice(chosen) for _ in range(sessions - unique)]
    times = sorted(rng.randrange(now, now + HOUR) for _ in dests)
    rng.shuffle(dests)
    return [TrafficEvent(t, host, dst, Method.GET, "/", {}, lan=lan,
                         session=new_session() if new_session else None) for t, dst in zip(times, dests)]


class BackgroundDevice(Host):
    def __init__(self, name: str, profile: BackgroundProfile):
        self.name = name
        self.profile = profile

    def start(self, sim: Simulation) -> None:
        self._rng = sim.stream(self.name)
        sim.schedule(lambda: self._hour(sim), sim.now)

    def _hour(self, sim: Simulation) -> None:
        for event in background_step(self.profile, self._rng, sim.now, self.name,
                                     new_session=sim.new_session):
            sim.schedule(event, event.time)
        sim.schedule(lambda: self._hour(sim), sim.now + HOUR)
