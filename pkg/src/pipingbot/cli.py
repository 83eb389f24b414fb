"""Command-line front end: load a scenario, run its phases, write a bundle."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .damage import (Algorithm, BACKEND, ConsumptionSeries, DamageReport, TopologyFormatError,
                     build_flow_network, max_flow_result, monitor_consumption, waste_table)
from .detector import (DEFAULT_TABLE, Tap, evaluate_accuracy, extract_features, is_smart_irrigation_system,
                       write_accuracy_csv, write_records)
from .netsim import write_trace
from .scenario import Scenario, ScenarioError, World, load_scenario

logger = logging.getLogger("pipingbot")

PHASES = ("simulate", "detect", "attack", "assess")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(ValueError):
    pass


def parse_phases(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return list(PHASES)
    chosen = [p.strip().lower() for p in text.split(",") if p.strip()]
    unknown = [p for p in chosen if p not in PHASES]
    if unknown:
        raise ConfigError(f"unknown phase(s): {', '.join(unknown)} (choose from {', '.join(PHASES)})")
    if not chosen:
        raise ConfigError("no phases given")
    if "attack" in chosen and "simulate" not in chosen:
        raise ConfigError("the attack phase needs the simulate phase (for the paired baseline)")
    return [p for p in PHASES if p in chosen]


def consumption_series(world: World, horizon: int, period: int) -> tuple[list[str], list[list[float]]]:
    """Per-device m^3 for each period; rows follow the period starts."""
    names = sorted(world.devices)
    rows = []
    for start in range(0, horizon, period):
        end = min(start + period, horizon)
        rows.append([world.devices[n].consumption(start, end) for n in names])
    return names, rows


def _by_source(trace) -> dict[str, list]:
    out: dict[str, list] = {}
    for e in trace:
        out.setdefault(e.src, []).append(e)
    return out


def _series(rows: list[list[float]], period: int) -> ConsumptionSeries:
    return ConsumptionSeries(period, [(i * period, sum(r)) for i, r in enumerate(rows)])


def _write_consumption(path: Path, names: list[str], rows: list[list[float]], period: int) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period_start", *names, "total"])
        for i, row in enumerate(rows):
            w.writerow([i * period, *(f"{v:.6f}" for v in row), f"{sum(row):.6f}"])


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


@dataclass
class Bundle:
    out: Path
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name


def run(scenario: Scenario, phases: Sequence[str], out: Path, *, workers: int = 1) -> Bundle:
    out.mkdir(parents=True, exist_ok=True)
    bundle = Bundle(out)
    horizon, period = scenario.horizon, scenario.consumption_period
    baseline: Optional[World] = None
    base_rows = None

    if "simulate" in phases:
        logger.info("simulate: %d s, seed %d", horizon, scenario.seed)
        baseline = scenario.world()
        baseline.sim.run_until(horizon)
        with bundle.path("trace.jsonl").open("w") as fh:
            write_trace(baseline.sim.trace, fh)
        names, base_rows = consumption_series(baseline, horizon, period)
        _write_consumption(bundle.path("consumption.csv"), names, base_rows, period)
        destinations = set(DEFAULT_TABLE)
        # features only look at a host's own requests
        own = _by_source(baseline.sim.trace)
        with bundle.path("features.jsonl").open("w") as fh:
            write_records((extract_features(own.get(h, []), h, (0, horizon), destinations).to_record()
                           for h in sorted(baseline.labels)), fh)
        bundle.summary["baseline_m3"] = round(sum(map(sum, base_rows)), 6)

    if "detect" in phases:
        periods = scenario.detection_periods
        logger.info("detect: periods %s over %d trials", periods, scenario.detection_trials)
        points = evaluate_accuracy(scenario, periods, scenario.detection_trials, workers=workers)
        with bundle.path("accuracy.csv").open("w") as fh:
            write_accuracy_csv(points, fh)
        longest = max(periods) if periods else 0
        world = baseline
        if world is None:
            world = scenario.world()
            world.sim.run_until(longest)
        own = _by_source(e for e in world.sim.trace if e.time < longest)
        with bundle.path("verdicts.jsonl").open("w") as fh:
            write_records((is_smart_irrigation_system(h, longest, Tap(own.get(h, []), world.sim.now)).to_record(h)
                           for h in sorted(world.labels)), fh)
        bundle.summary["accuracy"] = {str(p.period): p.accuracy for p in points}

    attacked: Optional[World] = None
    if "attack" in phases:
        logger.info("attack: %d infected host(s), %d command(s)", len(scenario.infected), len(scenario.commands))
        attacked = scenario.world(attack=True)
        attacked.sim.run_until(horizon)
        with bundle.path("attack_trace.jsonl").open("w") as fh:
            write_trace(attacked.sim.trace, fh)
        names, rows = consumption_series(attacked, horizon, period)
        _write_consumption(bundle.path("attack_consumption.csv"), names, rows, period)
        base_series, attack_series = _series(base_rows, period), _series(rows, period)
        with bundle.path("differential.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["period_start", "baseline", "attack", "difference"])
            for (s, b), (_, a) in zip(base_series.entries, attack_series.entries):
                w.writerow([s, f"{b:.6f}", f"{a:.6f}", f"{a - b:.6f}"])
        flagged = monitor_consumption(attack_series, base_series, scenario.monitor_threshold)
        with bundle.path("anomalies.jsonl").open("w") as fh:
            write_records(({"period_start": s, "threshold": scenario.monitor_threshold} for s in flagged), fh)
        with bundle.path("commands.jsonl").open("w") as fh:
            write_records((e.to_record() for e in attacked.cnc.log), fh)
        with bundle.path("bots.jsonl").open("w") as fh:
            write_records((_bot_record(attacked, name) for name in sorted(attacked.cnc.bots)), fh)
        bundle.summary["attack_m3"] = round(attack_series.total, 6)
        bundle.summary["differential_m3"] = round(attack_series.total - base_series.total, 6)

    if "assess" in phases:
        if scenario.topology is None:
            raise ConfigError("the assess phase needs a topology")
        net = build_flow_network(scenario.topology, scenario.w)
        results = {a: max_flow_result(net, a) for a in Algorithm}
        values = {r.value for r in results.values()}
        if len(values) != 1:
            raise RuntimeError(f"max-flow solvers disagree: {sorted(values)}")
        flow = results[Algorithm.DINIC].m3_per_hour
        report = DamageReport.assess(flow, scenario.tariff, scenario.assess_hours, net.warnings)
        doc = {
            "report": report.to_dict(),
            "max_flow": {a.value: r.m3_per_hour for a, r in results.items()},
            "w": scenario.w,
            "irrigated_consumers": len(net.irrigated),
            "published_waste_check": [
                {"sprinklers": row.sprinklers, "hours": row.hours, "formula_m3": row.computed,
                 "published_m3": row.published, "discrepancy": row.discrepancy}
                for row in waste_table()
            ],
        }
        if attacked is not None:
            doc["simulated"] = {k: bundle.summary[k] for k in ("baseline_m3", "attack_m3", "differential_m3")}
        _dump(bundle.path("damage.json"), doc)
        bundle.summary["wasted_water_m3"] = report.wasted_water

    manifest = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "phases": list(phases),
        "files": {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in sorted(bundle.files)},
    }
    _dump(out / "manifest.json", manifest)
    bundle.files.append("manifest.json")
    return bundle


def _bot_record(world: World, name: str) -> dict:
    bot = world.bots[name]
    lan = world.sim.lan_of(name)
    return {
        "bot": name,
        "lan": lan.id if lan else None,
        "region": lan.region if lan else None,
        "state": bot.state.value,
        "targets": [{"host": h, "kind": k.value} for h, k in bot.targets],
        "armed_at": bot.armed_at,
        "destroyed_at": bot.destroyed_at,
        "directives": [{"kind": r.directive.kind.value, "target": r.target, "start": r.directive.start,
                        "end": r.directive.end, "ok": r.ok} for r in bot.runners],
    }


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pipingbot", description=__doc__)
    p.add_argument("--scenario", required=True, help="scenario file (bundled names are looked up too)")
    p.add_argument("--phases", default="simulate,detect,attack,assess",
                   help="comma-separated subset of: %s (or 'all')" % ", ".join(PHASES))
    p.add_argument("--out", default="out", help="output directory for the artifact bundle")
    p.add_argument("--seed-override", type=int, default=None, help="replace the scenario seed")
    p.add_argument("--workers", type=int, default=1, help="processes for detection trials")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Iterable[str]] = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        phases = parse_phases(args.phases)
        scenario = load_scenario(args.scenario)
        if args.seed_override is not None:
            scenario = scenario.with_seed(args.seed_override)
        if "assess" in phases and scenario.topology is None:
            raise ConfigError("the assess phase needs a topology in the scenario")
    except (ConfigError, ScenarioError, TopologyFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        bundle = run(scenario, phases, Path(args.out), workers=args.workers)
    except Exception as exc:  # noqa: BLE001
        logger.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps({"out": str(args.out), "backend": BACKEND, **bundle.summary}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
