"""Identify smart irrigation controllers from the hosts they talk to.

A controller is recognised by the first outgoing packet addressed to one of
its vendor's cloud servers; no other device class contacts those hosts.
"""
from __future__ import annotations

import bisect
import csv
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import IO, Callable, Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from .devices.common import CLOUD_HOSTS, IrrigationKind, hostname_table
from .netsim import Simulation, TrafficEvent, random_stream, stream_id
from .plans import HOUR

DEFAULT_TABLE: Mapping[str, IrrigationKind] = hostname_table(CLOUD_HOSTS)


@dataclass(frozen=True)
class Verdict:
    result: Optional[IrrigationKind]
    elapsed: int
    matched_host: Optional[str] = None
    truncated: bool = False

    def __post_init__(self):
        if (self.result is None) != (self.matched_host is None):
            raise ValueError("a verdict names a matched host exactly when it names a kind")

    def to_record(self, host: str) -> dict:
        return {"host": host, "result": self.result.value if self.result else None,
                "elapsed": self.elapsed, "matched_host": self.matched_host,
                "truncated": self.truncated}


class Tap:
    """A chronological event stream known to be complete up to ``until``."""

    def __init__(self, events: Iterable[TrafficEvent], until: int | None = None):
        self.events = events
        self.until = until

    def __iter__(self) -> Iterator[TrafficEvent]:
        return iter(self.events)


def match(event: TrafficEvent, ip: str, table: Mapping[str, IrrigationKind]) -> Optional[IrrigationKind]:
    if event.src != ip or not event.is_request or event.via is not None:
        return None
    return table.get(event.dst_host)


def is_smart_irrigation_system(ip: str, period: int, tap: Iterable[TrafficEvent] | Tap, *,
                               start: int = 0,
                               table: Mapping[str, IrrigationKind] = DEFAULT_TABLE) -> Verdict:
    """Watch ``ip``'s outgoing traffic for ``period`` seconds from ``start``.

    Returns the vendor on the first packet to a known cloud host, or a
    ``None`` verdict once the window ``[start, start + period)`` has passed.
    Payloads are never looked at.
    """
    deadline = start + period
    last = start
    for event in tap:
        if event.time >= deadline:
            return Verdict(None, period)
        if event.time < start:
            continue
        last = event.time
        kind = match(event, ip, table)
        if kind is not None:
            return Verdict(kind, event.time - start, event.dst_host)
    until = tap.until if isinstance(tap, Tap) and tap.until is not None else last
    if until >= deadline:
        return Verdict(None, period)
    return Verdict(None, max(0, until - start), truncated=True)


class LiveDetector:
    """Run the classifier against a running simulation.

    ``on_verdict`` fires once: on the first match or when the window closes.
    """

    def __init__(self, sim: Simulation, ip: str, period: int,
                 on_verdict: Callable[[str, Verdict], None],
                 table: Mapping[str, IrrigationKind] = DEFAULT_TABLE):
        self.sim, self.ip, self.period, self.table = sim, ip, period, table
        self.start = sim.now
        self.verdict: Optional[Verdict] = None
        self._on_verdict = on_verdict
        self._unsubscribe = sim.subscribe(self._observe)
        self._deadline = sim.schedule(self._expire, self.start + period)

    def _finish(self, verdict: Verdict) -> None:
        if self.verdict is not None:
            return
        self.verdict = verdict
        self._unsubscribe()
        self._deadline.cancel()
        self._on_verdict(self.ip, verdict)

    def _observe(self, event: TrafficEvent) -> None:
        if event.time >= self.start + self.period:
            return
        kind = match(event, self.ip, self.table)
        if kind is not None:
            self._finish(Verdict(kind, event.time - self.start, event.dst_host))

    def _expire(self) -> None:
        self._finish(Verdict(None, self.period))

    def close(self) -> None:
        """Stop early (the tap is closed): the verdict is flagged truncated."""
        self._finish(Verdict(None, self.sim.now - self.start, truncated=True))


# -- features --------------------------------------------------------------

@dataclass(frozen=True)
class FeatureRow:
    host: str
    window: tuple[int, int]
    unique_destinations: int
    cloud_sessions: int
    gap_p99: Optional[float] = None
    gap_max: Optional[int] = None

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["window"] = list(self.window)
        return rec


def percentile99(values: Sequence[float]) -> float:
    """Linear-interpolation 99th percentile (numpy's default definition)."""
    if len(values) == 1:
        return float(values[0])
    return statistics.quantiles(values, n=100, method="inclusive")[98]


def session_starts(trace: Iterable[TrafficEvent], host: str,
                   destinations: Iterable[str] | None = None) -> list[int]:
    """Start time of each TCP session ``host`` opened towards ``destinations``."""
    dests = set(DEFAULT_TABLE if destinations is None else destinations)
    first: dict[int, int] = {}
    for e in trace:
        if e.src == host and e.is_request and e.via is None and e.dst_host in dests and e.session is not None:
            first.setdefault(e.session, e.time)
    return sorted(first.values())


def extract_features(trace: Sequence[TrafficEvent], host: str, window: tuple[int, int],
                     destinations: Iterable[str] | None = None) -> FeatureRow:
    a, b = window
    if a > b:
        raise ValueError(f"bad window {window}")
    inside = [e for e in trace if a <= e.time < b]
    unique = {e.dst_host for e in inside if e.src == host and e.is_request and e.via is None}
    starts = session_starts(inside, host, destinations)
    gaps = [y - x for x, y in zip(starts, starts[1:])]
    if not gaps:
        return FeatureRow(host, (a, b), len(unique), len(starts))
    return FeatureRow(host, (a, b), len(unique), len(starts), percentile99(gaps), max(gaps))


def hourly_counts(trace: Sequence[TrafficEvent], host: str, horizon: int,
                  destinations: Iterable[str] | None = None) -> list[tuple[int, int]]:
    """(sessions to cloud, unique destinations) for each whole hour."""
    out = []
    for h in range(horizon // HOUR):
        row = extract_features(trace, host, (h * HOUR, (h + 1) * HOUR), destinations)
        out.append((row.cloud_sessions, row.unique_destinations))
    return out


# -- accuracy harness ------------------------------------------------------

class AccuracyPoint(NamedTuple):
    period: int
    accuracy: float
    correct: int
    total: int
    false_positives: int


def trial_seed(seed: int, trial: int) -> int:
    return random_stream(seed, stream_id(f"trial/{trial}")).getrandbits(63)


def _run_trial(args) -> list[tuple[int, int, int, int]]:
    scenario, trial, periods, table = args
    seed = trial_seed(scenario.seed, trial)
    world = scenario.world(seed)
    longest = max(periods)
    phase_rng = random_stream(scenario.seed, stream_id(f"phase/{trial}"))
    phase = phase_rng.randint(0, max(0, scenario.horizon - longest))
    sim: Simulation = world.sim
    sim.run_until(phase + longest)
    by_src: dict[str, list[TrafficEvent]] = {}
    for e in sim.trace:
        if e.is_request:
            by_src.setdefault(e.src, []).append(e)
    windows = {}
    for host in world.labels:
        events = by_src.get(host, [])
        windows[host] = events[bisect.bisect_left([e.time for e in events], phase):]
    rows = []
    for period in periods:
        correct = total = fp = 0
        for host, label in sorted(world.labels.items(), key=lambda kv: kv[0]):
            verdict = is_smart_irrigation_system(host, period, Tap(windows[host], sim.now),
                                                 start=phase, table=table)
            total += 1
            correct += verdict.result == label
            fp += label is None and verdict.result is not None
        rows.append((period, correct, total, fp))
    return rows


def evaluate_accuracy(scenario, periods: Sequence[int], trials: int, *, workers: int = 1,
                      table: Mapping[str, IrrigationKind] = DEFAULT_TABLE) -> list[AccuracyPoint]:
    """Per-host classification accuracy for each observation period.

    Every trial rebuilds the scenario with its own seed and starts watching at
    a uniformly random phase. ``scenario`` must provide ``seed``, ``horizon``
    and ``world(seed)`` returning an object with ``sim`` (unstarted clock at
    0, hosts started) and ``labels`` (host -> kind or None).
    """
    periods = list(periods)
    if not periods:
        return []
    if max(periods) > scenario.horizon:
        raise ValueError("observation period longer than the scenario horizon")
    jobs = [(scenario, t, periods, table) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(job) for job in jobs]
    points = []
    for k, period in enumerate(periods):
        correct = sum(r[k][1] for r in results)
        total = sum(r[k][2] for r in results)
        fp = sum(r[k][3] for r in results)
        points.append(AccuracyPoint(period, correct / total if total else 0.0, correct, total, fp))
    return points


def write_accuracy_csv(points: Iterable[AccuracyPoint], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["period", "accuracy", "correct", "total", "false_positives"])
    for p in points:
        writer.writerow([p.period, f"{p.accuracy:.6f}", p.correct, p.total, p.false_positives])


def write_records(records: Iterable[dict], fh: IO[str]) -> None:
    for rec in records:
        fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
        fh.write("\n")
