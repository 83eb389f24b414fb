from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping

from ..netsim import Host, Simulation
from ..plans import SPRINKLER_FLOW, water_volume


class IrrigationKind(str, Enum):
    GREENIQ = "GreenIQ"
    RAINMACHINE = "RainMachine"
    BLUESPRAY = "BlueSpray"

    @classmethod
    def parse(cls, text: str) -> "IrrigationKind":
        for kind in cls:
            if kind.value.lower() == str(text).lower():
                return kind
        raise ValueError(f"unknown irrigation kind {text!r}")


CLOUD_HOSTS: Mapping[IrrigationKind, tuple[str, ...]] = {
    IrrigationKind.BLUESPRAY: ("cloud.bluespray.net", "www.bluespray.net"),
    IrrigationKind.GREENIQ: ("www.greeniq.net",),
    IrrigationKind.RAINMACHINE: ("proxy1.rainmachine.com",),
}


def hostname_table(cloud_hosts: Mapping[IrrigationKind, tuple[str, ...]] = CLOUD_HOSTS) -> dict[str, IrrigationKind]:
    table: dict[str, IrrigationKind] = {}
    for kind, hosts in cloud_hosts.items():
        for h in hosts:
            if h in table:
                raise ValueError(f"{h} listed under {table[h].value} and {kind.value}")
            table[h] = kind
    return table


@dataclass(frozen=True)
class SessionProfile:
    """Gaps between consecutive cloud TCP session starts.

    Most gaps are uniform on ``[min_gap, max_gap]``; with probability
    ``long_gap_prob`` a gap is drawn from ``long_gap`` instead, but never
    within ``long_gap_spacing`` gaps of the previous long one (keeps long
    gaps under 1% of any day-long stretch).
    """

    min_gap: int
    max_gap: int
    long_gap_prob: float = 0.0
    long_gap: tuple[int, int] = (600, 900)
    first_max: int = 300
    long_gap_spacing: int = 150

    def draw(self, rng: random.Random, since_long: int | None = None) -> int:
        allowed = since_long is None or since_long >= self.long_gap_spacing
        if self.long_gap_prob and rng.random() < self.long_gap_prob and allowed:
            return rng.randint(*self.long_gap)
        return rng.randint(self.min_gap, self.max_gap)

    def gaps(self, rng: random.Random) -> Iterator[int]:
        since = self.long_gap_spacing
        while True:
            gap = self.draw(rng, since)
            since = 0 if gap > self.max_gap else since + 1
            yield gap

    @property
    def max_possible_gap(self) -> int:
        return max(self.max_gap, self.long_gap[1] if self.long_gap_prob else 0)


DEFAULT_SESSIONS: Mapping[IrrigationKind, SessionProfile] = {
    # reconnects snap to the 60 s ping ticks, so realised gaps are 360..480
    IrrigationKind.GREENIQ: SessionProfile(330, 450, first_max=60),
    IrrigationKind.RAINMACHINE: SessionProfile(360, 540, 0.004),
    IrrigationKind.BLUESPRAY: SessionProfile(360, 540, 0.004),
}


class IrrigationDevice(Host):
    """Shared bookkeeping for the three controllers: identity, water accounting."""

    kind: IrrigationKind
    zone_flow: float = SPRINKLER_FLOW

    def zone_windows(self, a: int, b: int) -> dict[int, list[tuple[int, int]]]:
        raise NotImplementedError

    def consumption(self, a: int, b: int) -> float:
        """m^3 consumed during ``[a, b)``."""
        return water_volume(self.zone_windows(a, b), self.zone_flow)

    def open_seconds(self, a: int, b: int) -> int:
        return round(self.consumption(a, b) * 3600 / self.zone_flow) if self.zone_flow else 0


def session_rng(sim: Simulation, name: str) -> random.Random:
    return sim.stream(f"{name}/sessions")


class CloudService(Host):
    """Vendor cloud endpoint that acknowledges heartbeats."""

    def __init__(self, name: str):
        self.name = name
        self.requests = 0

    def handle_request(self, sim: Simulation, request) -> dict:
        self.requests += 1
        return {"status": "ok"}
