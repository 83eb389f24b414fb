"""Water waste, financial damage and consumption monitoring."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

from ..plans import SPRINKLER_FLOW

WATER_TOWER_M3 = 3785.0
PORTLAND_TARIFF = 8.0  # $ per m^3

# (sprinklers, hours, printed waste in m^3) as published in the damage table
PUBLISHED_WASTE = (
    (1, 1.0, 2.795),
    (1355, 1.0, 3787.0),
    (13550, 0.1, 3787.0),
    (143200, 1.0, 404244.0),
    (23866, 6.0, 404244.0),
)


def empirical_waste(n_sprinklers: float, hours: float, flow: float = SPRINKLER_FLOW) -> float:
    """Water (m^3) wasted by ``n_sprinklers`` running for ``hours``."""
    if n_sprinklers < 0 or hours < 0 or flow < 0:
        raise ValueError("sprinkler count, hours and flow must be non-negative")
    return flow * n_sprinklers * hours


def financial_damage(max_flow: float, tariff: float, hours: float) -> float:
    if max_flow < 0 or tariff < 0 or hours < 0:
        raise ValueError("flow, tariff and hours must be non-negative")
    return max_flow * tariff * hours


class WasteRow(NamedTuple):
    sprinklers: int
    hours: float
    computed: float
    published: float
    discrepancy: bool


def waste_table(rows: Iterable[tuple[int, float, float]] = PUBLISHED_WASTE, *,
                tolerance: float = 1.0) -> list[WasteRow]:
    """Recompute each published row; rows further than ``tolerance`` m^3 from
    the formula are flagged."""
    out = []
    for n, hours, printed in rows:
        value = empirical_waste(n, hours)
        out.append(WasteRow(n, hours, round(value, 3), printed, abs(value - printed) > tolerance))
    return out


@dataclass(frozen=True)
class DamageReport:
    max_flow: float  # m^3/h
    wasted_water: float  # m^3
    financial: float
    duration: float  # hours
    tariff: float
    warnings: tuple[str, ...] = ()

    @classmethod
    def assess(cls, max_flow: float, tariff: float, hours: float,
               warnings: Sequence[str] = ()) -> "DamageReport":
        return cls(max_flow, max_flow * hours, financial_damage(max_flow, tariff, hours),
                   hours, tariff, tuple(warnings))

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["warnings"] = list(self.warnings)
        return doc


class SeriesMismatch(ValueError):
    pass


@dataclass
class ConsumptionSeries:
    """Aggregate consumption per fixed-length period."""

    period: int
    entries: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        for start, volume in self.entries:
            if volume < 0:
                raise ValueError(f"negative consumption at {start}")

    @property
    def starts(self) -> list[int]:
        return [s for s, _ in self.entries]

    @property
    def total(self) -> float:
        return sum(v for _, v in self.entries)

    def minus(self, other: "ConsumptionSeries") -> list[tuple[int, float]]:
        _check_aligned(self, other)
        return [(s, a - b) for (s, a), (_, b) in zip(self.entries, other.entries)]


def _check_aligned(a: ConsumptionSeries, b: ConsumptionSeries) -> None:
    if a.period != b.period or a.starts != b.starts:
        raise SeriesMismatch("consumption series cover different periods")


def monitor_consumption(series: ConsumptionSeries, baseline: ConsumptionSeries,
                        threshold: float) -> list[int]:
    """Start of every period whose consumption exceeds the baseline by more
    than ``threshold`` (a fraction)."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    _check_aligned(series, baseline)
    return [s for (s, v), (_, b) in zip(series.entries, baseline.entries) if v > b * (1 + threshold)]
