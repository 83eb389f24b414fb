"""Watering plans and the water they consume."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

DAY = 86400
HOUR = 3600

# mean of the 0.66..4.93 m^3/h sprinkler range
SPRINKLER_FLOW = 2.795


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class WateringPlan:
    """Water ``zones`` during each daily ``(offset, duration)`` window, between
    ``start`` and ``end`` (scenario seconds)."""

    zones: tuple[int, ...]
    start: int
    end: int
    schedule: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(sorted(set(int(z) for z in self.zones))))
        object.__setattr__(self, "schedule", tuple((int(o), int(d)) for o, d in self.schedule))

    def validate(self, zone_count: int = 24) -> "WateringPlan":
        if self.start >= self.end:
            raise PlanError(f"plan start {self.start} not before end {self.end}")
        if not self.zones:
            raise PlanError("plan without zones")
        for z in self.zones:
            if not 1 <= z <= zone_count:
                raise PlanError(f"zone {z} outside 1..{zone_count}")
        for offset, duration in self.schedule:
            if offset < 0 or duration <= 0 or offset + duration > DAY:
                raise PlanError(f"bad daily window ({offset}, {duration})")
        return self

    @classmethod
    def continuous(cls, zones: Iterable[int], start: int, end: int) -> "WateringPlan":
        """Water all day, every day, between start and end."""
        return cls(tuple(zones), start, end, ((0, DAY),))

    def windows(self, a: int, b: int) -> Iterator[tuple[int, int]]:
        """Watering windows clipped to ``[a, b)``."""
        lo, hi = max(a, self.start), min(b, self.end)
        if lo >= hi:
            return
        for day in range(lo // DAY, (hi - 1) // DAY + 1):
            base = day * DAY
            for offset, duration in self.schedule:
                s, e = max(lo, base + offset), min(hi, base + offset + duration)
                if s < e:
                    yield s, e

    def to_dict(self) -> dict:
        return {"zones": list(self.zones), "start": self.start, "end": self.end,
                "schedule": [list(w) for w in self.schedule]}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "WateringPlan":
        try:
            return cls(tuple(doc["zones"]), int(doc["start"]), int(doc["end"]),
                       tuple(tuple(w) for w in doc["schedule"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanError(f"malformed plan document: {exc}") from exc


def merge_intervals(intervals: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for s, e in sorted(intervals):
        if out and s <= out[-1][1]:
            if e > out[-1][1]:
                out[-1] = (out[-1][0], e)
        else:
            out.append((s, e))
    return out


def covered(intervals: Iterable[tuple[int, int]]) -> int:
    return sum(e - s for s, e in merge_intervals(intervals))


@dataclass
class PlanHistory:
    """Plan sets adopted by a device over time (piecewise constant)."""

    times: list[int] = field(default_factory=lambda: [0])
    states: list[tuple[WateringPlan, ...]] = field(default_factory=lambda: [()])

    def set(self, t: int, plans: Sequence[WateringPlan]) -> None:
        plans = tuple(plans)
        if t < self.times[-1]:
            raise ValueError("plan history must be appended in time order")
        if t == self.times[-1]:
            self.states[-1] = plans
        else:
            self.times.append(t)
            self.states.append(plans)

    @property
    def current(self) -> tuple[WateringPlan, ...]:
        return self.states[-1]

    def at(self, t: int) -> tuple[WateringPlan, ...]:
        return self.states[bisect.bisect_right(self.times, t) - 1]

    def zone_windows(self, a: int, b: int) -> dict[int, list[tuple[int, int]]]:
        out: dict[int, list[tuple[int, int]]] = {}
        i = max(bisect.bisect_right(self.times, a) - 1, 0)
        while i < len(self.times) and self.times[i] < b:
            seg_lo = max(a, self.times[i])
            seg_hi = b if i + 1 == len(self.times) else min(b, self.times[i + 1])
            for plan in self.states[i]:
                for s, e in plan.windows(seg_lo, seg_hi):
                    for z in plan.zones:
                        out.setdefault(z, []).append((s, e))
            i += 1
        return out


@dataclass
class ValveLog:
    """Bitstring valve states set by direct GPIO commands."""

    times: list[int] = field(default_factory=lambda: [0])
    bits: list[str] = field(default_factory=lambda: ["00000000"])

    def set(self, t: int, bits: str) -> None:
        if t == self.times[-1]:
            self.bits[-1] = bits
        else:
            self.times.append(t)
            self.bits.append(bits)

    @property
    def current(self) -> str:
        return self.bits[-1]

    def zone_windows(self, a: int, b: int) -> dict[int, list[tuple[int, int]]]:
        out: dict[int, list[tuple[int, int]]] = {}
        for i, t in enumerate(self.times):
            lo = max(a, t)
            hi = b if i + 1 == len(self.times) else min(b, self.times[i + 1])
            if lo >= hi:
                continue
            for z, bit in enumerate(self.bits[i], start=1):
                if bit == "1":
                    out.setdefault(z, []).append((lo, hi))
        return out


def water_volume(zone_windows: Mapping[int, list[tuple[int, int]]], zone_flow: float) -> float:
    """m^3 delivered when each zone flows at ``zone_flow`` m^3/h over the union
    of its windows."""
    seconds = sum(covered(ws) for ws in zone_windows.values())
    return seconds * zone_flow / HOUR


def combine_windows(*parts: Mapping[int, list[tuple[int, int]]]) -> dict[int, list[tuple[int, int]]]:
    out: dict[int, list[tuple[int, int]]] = {}
    for part in parts:
        for z, ws in part.items():
            out.setdefault(z, []).extend(ws)
    return out
