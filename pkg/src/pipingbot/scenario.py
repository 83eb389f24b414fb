"""Scenario files: YAML descriptions of LANs, infections, commands and a
pipeline topology, plus construction of the simulated world they describe.

Any list item carrying ``count: N`` is repeated N times; ``{i}`` in its
strings becomes 1..N (``as: j`` picks another placeholder name, which lets
nested repetitions coexist).
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .attacks import AttackKind
from .botnet import Bot, BotCommand, CommandAndControl, CommandOp, broadcast
from .damage import PipelineTopology, TopologyFormatError, load_topology, parse_topology
from .devices import (DEFAULT_PROFILES, CLOUD_HOSTS, BackgroundDevice, BackgroundProfile, BlueSprayDevice,
                      CloudService, DeviceClass, GreenIqCloud, GreenIqDevice, IrrigationDevice, IrrigationKind,
                      NeedModel, RainMachineDevice, SessionProfile)
from .netsim import Lan, Simulation
from .plans import SPRINKLER_FLOW, PlanError, WateringPlan
from .weather import DEFAULT_CLIMATES, LONDON, WeatherService

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


# -- YAML with line numbers ------------------------------------------------

class LineDict(dict):
    line: Optional[int] = None


class LineList(list):
    line: Optional[int] = None


class _Loader(yaml.SafeLoader):
    pass


def _mapping(loader: _Loader, node: yaml.MappingNode) -> LineDict:
    loader.flatten_mapping(node)
    out = LineDict()
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            raise ScenarioError(f"duplicate key {key!r}", key_node.start_mark.line + 1, loader.name)
        out[key] = loader.construct_object(value_node, deep=True)
    out.line = node.start_mark.line + 1
    return out


def _sequence(loader: _Loader, node: yaml.SequenceNode) -> LineList:
    out = LineList(loader.construct_object(n, deep=True) for n in node.value)
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _sequence)


def _line(obj: Any, default: int | None = None) -> Optional[int]:
    return getattr(obj, "line", None) or default


def _substitute(obj: Any, var: str, value: int) -> Any:
    token = "{" + var + "}"
    if isinstance(obj, str):
        return obj.replace(token, str(value))
    if isinstance(obj, LineDict):
        out = LineDict((k, _substitute(v, var, value)) for k, v in obj.items())
        out.line = obj.line
        return out
    if isinstance(obj, LineList):
        out = LineList(_substitute(v, var, value) for v in obj)
        out.line = obj.line
        return out
    return obj


def expand_counts(obj: Any, source: str = "<scenario>") -> Any:
    """Replicate every list item that has a ``count`` key (outermost first)."""
    if isinstance(obj, LineDict):
        out = LineDict((k, expand_counts(v, source)) for k, v in obj.items())
        out.line = obj.line
        return out
    if isinstance(obj, LineList):
        items = LineList()
        items.line = obj.line
        for item in obj:
            if isinstance(item, LineDict) and "count" in item:
                n, var = item["count"], item.get("as", "i")
                if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                    raise ScenarioError("count must be a non-negative integer", item.line, source)
                template = LineDict((k, v) for k, v in item.items() if k not in ("count", "as"))
                template.line = item.line
                for i in range(1, n + 1):
                    items.append(expand_counts(_substitute(template, str(var), i), source))
            else:
                items.append(expand_counts(item, source))
        return items
    return obj


# -- scenario model --------------------------------------------------------

@dataclass
class DeviceSpec:
    name: str
    kind: IrrigationKind
    options: Mapping[str, Any]
    line: Optional[int] = None


@dataclass
class BackgroundSpec:
    name: str
    profile: BackgroundProfile


@dataclass
class LanSpec:
    id: str
    region: str = ""
    latency: int = 0
    devices: list[DeviceSpec] = field(default_factory=list)
    background: list[BackgroundSpec] = field(default_factory=list)
    hosts: list[str] = field(default_factory=list)

    def members(self) -> list[str]:
        return [d.name for d in self.devices] + [b.name for b in self.background] + list(self.hosts)


@dataclass
class CommandSpec:
    command: BotCommand
    bots: Optional[list[str]] = None


@dataclass
class Scenario:
    seed: int
    horizon: int
    lans: list[LanSpec]
    infected: list[str] = field(default_factory=list)
    commands: list[CommandSpec] = field(default_factory=list)
    topology: Optional[PipelineTopology] = None
    tariff: float = 8.0
    w: float = SPRINKLER_FLOW
    detection_periods: list[int] = field(default_factory=lambda: [0, 300, 600, 900])
    detection_trials: int = 200
    consumption_period: int = 3600
    monitor_threshold: float = 0.5
    assess_hours: float = 1.0
    scan_period: int = 900
    scan_mode: str = "concurrent"
    infect_at: int = 0
    attacks: Optional[dict[IrrigationKind, tuple[tuple[AttackKind, dict], ...]]] = None
    name: str = "scenario"

    @property
    def device_specs(self) -> dict[str, DeviceSpec]:
        return {d.name: d for lan in self.lans for d in lan.devices}

    @property
    def hosts(self) -> set[str]:
        return {h for lan in self.lans for h in lan.members()}

    def with_seed(self, seed: int) -> "Scenario":
        out = copy.copy(self)
        out.seed = seed
        return out

    def world(self, seed: int | None = None, *, attack: bool = False) -> "World":
        return build_world(self, self.seed if seed is None else seed, attack=attack)


# -- parsing ---------------------------------------------------------------

class _Reader:
    def __init__(self, source: str):
        self.source = source

    def fail(self, message: str, obj: Any = None, line: int | None = None) -> ScenarioError:
        return ScenarioError(message, _line(obj, line), self.source)

    def mapping(self, obj: Any, what: str, line: int | None = None) -> LineDict:
        if not isinstance(obj, dict):
            raise self.fail(f"{what} must be a mapping", obj, line)
        return obj

    def seq(self, obj: Any, what: str, line: int | None = None) -> list:
        if obj is None:
            return LineList()
        if not isinstance(obj, list):
            raise self.fail(f"{what} must be a list", obj, line)
        return obj

    def int(self, d: Mapping, key: str, default: Any = ..., *, minimum: int | None = None) -> int:
        if key not in d:
            if default is ...:
                raise self.fail(f"missing required field {key!r}", d)
            return default
        v = d[key]
        if not isinstance(v, int) or isinstance(v, bool):
            raise self.fail(f"{key} must be an integer, got {v!r}", d)
        if minimum is not None and v < minimum:
            raise self.fail(f"{key} must be >= {minimum}, got {v}", d)
        return v

    def num(self, d: Mapping, key: str, default: Any = ..., *, minimum: float | None = None) -> float:
        if key not in d:
            if default is ...:
                raise self.fail(f"missing required field {key!r}", d)
            return default
        v = d[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise self.fail(f"{key} must be a number, got {v!r}", d)
        if minimum is not None and v < minimum:
            raise self.fail(f"{key} must be >= {minimum}, got {v}", d)
        return float(v)

    def str(self, d: Mapping, key: str, default: Any = ...) -> str:
        if key not in d:
            if default is ...:
                raise self.fail(f"missing required field {key!r}", d)
            return default
        v = d[key]
        if not isinstance(v, str) or not v:
            raise self.fail(f"{key} must be a non-empty string, got {v!r}", d)
        return v

    def plan(self, obj: Any, zone_count: int, line: int | None) -> WateringPlan:
        d = self.mapping(obj, "plan", line)
        try:
            schedule = tuple(tuple(w) for w in self.seq(d.get("schedule"), "schedule", _line(d)))
            plan = WateringPlan(tuple(self.seq(d.get("zones"), "zones", _line(d))),
                                self.int(d, "start"), self.int(d, "end"), schedule)
            return plan.validate(zone_count)
        except (PlanError, TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise self.fail(f"invalid plan: {exc}", d) from None

    def sessions(self, obj: Any, line: int | None) -> SessionProfile:
        d = self.mapping(obj, "sessions", line)
        lo, hi = self.int(d, "min_gap", minimum=1), self.int(d, "max_gap", minimum=1)
        if hi < lo:
            raise self.fail("max_gap must be >= min_gap", d)
        long_gap = tuple(self.seq(d.get("long_gap", [600, 900]), "long_gap", _line(d)))
        if len(long_gap) != 2:
            raise self.fail("long_gap must be [min, max]", d)
        return SessionProfile(lo, hi, self.num(d, "long_gap_prob", 0.0, minimum=0.0),
                              (int(long_gap[0]), int(long_gap[1])), self.int(d, "first_max", 300, minimum=1),
                              self.int(d, "long_gap_spacing", 150, minimum=0))


_DEVICE_KEYS = {
    IrrigationKind.GREENIQ: {"name", "kind", "plans", "ssh", "updates", "sessions", "zone_flow", "user_id"},
    IrrigationKind.RAINMACHINE: {"name", "kind", "base_plan", "location", "model", "sessions", "zone_flow"},
    IrrigationKind.BLUESPRAY: {"name", "kind", "plans", "zone_count", "sessions", "zone_flow"},
}
_LOCATIONS = {c.name.split("-")[0]: (c.lat, c.lon) for c in DEFAULT_CLIMATES}


def _location(r: _Reader, value: Any, line: int | None) -> tuple[float, float]:
    if isinstance(value, str):
        if value.lower() not in _LOCATIONS:
            raise r.fail(f"unknown location {value!r} (known: {', '.join(sorted(_LOCATIONS))})", line=line)
        return _LOCATIONS[value.lower()]
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return float(value[0]), float(value[1])
    raise r.fail("location must be a name or [lat, lon]", value, line)


def _device(r: _Reader, d: LineDict) -> DeviceSpec:
    name = r.str(d, "name")
    try:
        kind = IrrigationKind.parse(r.str(d, "kind"))
    except ValueError as exc:
        raise r.fail(str(exc), d) from None
    extra = set(d) - _DEVICE_KEYS[kind]
    if extra:
        raise r.fail(f"unknown field(s) for {kind.value} device {name!r}: {', '.join(sorted(extra))}", d)
    opts: dict[str, Any] = {}
    if "sessions" in d:
        opts["sessions"] = r.sessions(d["sessions"], d.line)
    if "zone_flow" in d:
        opts["zone_flow"] = r.num(d, "zone_flow", minimum=0.0)
    if kind is IrrigationKind.GREENIQ:
        opts["plans"] = [r.plan(p, 8, d.line) for p in r.seq(d.get("plans"), "plans", d.line)]
        ssh = d.get("ssh", True)
        if not isinstance(ssh, bool):
            raise r.fail("ssh must be true or false", d)
        opts["ssh_enabled"] = ssh
        opts["user_id"] = r.str(d, "user_id", name)
        updates = []
        for u in r.seq(d.get("updates"), "updates", d.line):
            u = r.mapping(u, "update", d.line)
            updates.append((r.int(u, "at", minimum=1),
                            [r.plan(p, 8, u.line) for p in r.seq(u.get("plans"), "plans", u.line)]))
        opts["updates"] = updates
    elif kind is IrrigationKind.RAINMACHINE:
        if "base_plan" not in d:
            raise r.fail(f"RainMachine {name!r} needs a base_plan", d)
        opts["base_plan"] = r.plan(d["base_plan"], 24, d.line)
        opts["location"] = _location(r, d.get("location", "london"), d.line)
        if "model" in d:
            m = r.mapping(d["model"], "model", d.line)
            opts["model"] = NeedModel(r.num(m, "k", 0.25, minimum=0.0), r.num(m, "t_ref", 10.0),
                                      r.num(m, "base_need", 5.0, minimum=1e-9))
    else:
        zone_count = r.int(d, "zone_count", 8, minimum=4)
        if zone_count > 24:
            raise r.fail("zone_count must be within 4..24", d)
        opts["zone_count"] = zone_count
        opts["plans"] = [r.plan(p, zone_count, d.line) for p in r.seq(d.get("plans"), "plans", d.line)]
    return DeviceSpec(name, kind, opts, d.line)


def _profiles(r: _Reader, doc: Any) -> dict[DeviceClass, BackgroundProfile]:
    out = dict(DEFAULT_PROFILES)
    if doc is None:
        return out
    doc = r.mapping(doc, "profiles")
    for key, spec in doc.items():
        try:
            cls = DeviceClass(key)
        except ValueError:
            raise r.fail(f"unknown device class {key!r}", doc) from None
        spec = r.mapping(spec, f"profile {key}", doc.line)
        base = out[cls]
        spr = tuple(spec.get("sessions_per_hour", base.sessions_per_hour))
        try:
            out[cls] = BackgroundProfile(
                cls, tuple(spec.get("destinations", base.destinations)), (int(spr[0]), int(spr[1])),
                r.num(spec, "unique_mean", base.unique_destinations_mean, minimum=0.0),
                r.num(spec, "unique_sd", base.unique_destinations_sd, minimum=0.0))
        except (ValueError, IndexError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise r.fail(f"profile {key}: {exc}", spec) from None
    return out


def _topology(r: _Reader, value: Any, base_dir: Path | None, line: int | None) -> PipelineTopology:
    try:
        if isinstance(value, str) and "\n" in value:
            return parse_topology(value, f"{r.source}:topology")
        if isinstance(value, str):
            path = Path(value)
            if not path.is_absolute():
                candidates = ([base_dir / path] if base_dir else []) + [DATA_DIR / path]
                path = next((p for p in candidates if p.exists()), candidates[0])
            if not path.exists():
                raise r.fail(f"topology file {value!r} not found", line=line)
            return load_topology(path)
        if isinstance(value, dict) and "text" in value:
            return parse_topology(str(value["text"]), f"{r.source}:topology")
        return PipelineTopology.from_dict(r.mapping(value, "topology", line))
    except TopologyFormatError as exc:
        raise r.fail(f"topology: {exc}", value, line) from None


def _attacks(r: _Reader, doc: Any) -> dict[IrrigationKind, tuple[tuple[AttackKind, dict], ...]]:
    doc = r.mapping(doc, "attacks")
    out = {}
    for key, entries in doc.items():
        try:
            kind = IrrigationKind.parse(str(key))
        except ValueError as exc:
            raise r.fail(str(exc), doc) from None
        items = []
        for e in r.seq(entries, f"attacks.{key}", doc.line):
            e = r.mapping(e, "attack", doc.line)
            try:
                attack = AttackKind(r.str(e, "kind"))
            except ValueError:
                raise r.fail(f"unknown attack kind {e.get('kind')!r}", e) from None
            params = dict(r.mapping(e.get("params", {}), "params", e.line))
            for k in ("band", "fake", "long_gap"):
                if k in params:
                    params[k] = tuple(params[k])
            items.append((attack, params))
        out[kind] = tuple(items)
    return out


_TOP_KEYS = {"name", "seed", "horizon", "lans", "infected", "commands", "topology", "tariff", "w",
             "detection", "consumption_period", "monitor_threshold", "assess_hours", "scan_period",
             "scan_mode", "infect_at", "attacks", "profiles"}


def parse_scenario(text: str, source: str = "<scenario>", base_dir: Path | None = None) -> Scenario:
    r = _Reader(source)
    try:
        loader = _Loader(text)
        loader.name = source
        try:
            doc = loader.get_single_data()
        finally:
            loader.dispose()
    except ScenarioError:
        raise
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"parse error: {getattr(exc, 'problem', exc)}",
                            mark.line + 1 if mark else None, source) from None
    if doc is None:
        raise ScenarioError("parse error: empty scenario file", None, source)
    doc = r.mapping(doc, "scenario", 1)
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise r.fail(f"unknown top-level field(s): {', '.join(sorted(unknown))}", doc)
    doc = expand_counts(doc, source)

    seed = r.int(doc, "seed", 0)
    horizon = r.int(doc, "horizon", minimum=1)
    profiles = _profiles(r, doc.get("profiles"))
    lans: list[LanSpec] = []
    seen_hosts: dict[str, int | None] = {}
    seen_lans: set[str] = set()
    lan_docs = r.seq(doc.get("lans"), "lans", doc.line)
    if not lan_docs:
        raise r.fail("scenario declares no LANs", doc)
    for ld in lan_docs:
        ld = r.mapping(ld, "lan", _line(lan_docs))
        lan = LanSpec(r.str(ld, "id"), str(ld.get("region", "")), r.int(ld, "latency", 0, minimum=0))
        if lan.id in seen_lans:
            raise r.fail(f"duplicate LAN {lan.id!r}", ld)
        seen_lans.add(lan.id)
        for dd in r.seq(ld.get("devices"), "devices", ld.line):
            lan.devices.append(_device(r, r.mapping(dd, "device", ld.line)))
        for bd in r.seq(ld.get("background"), "background", ld.line):
            bd = r.mapping(bd, "background device", ld.line)
            try:
                cls = DeviceClass(r.str(bd, "class"))
            except ValueError:
                raise r.fail(f"unknown device class {bd.get('class')!r}", bd) from None
            lan.background.append(BackgroundSpec(r.str(bd, "name"), profiles[cls]))
        for h in r.seq(ld.get("hosts"), "hosts", ld.line):
            if not isinstance(h, str) or not h:
                raise r.fail("host names must be non-empty strings", ld)
            lan.hosts.append(h)
        for h in lan.members():
            if h in seen_hosts:
                raise r.fail(f"duplicate host {h!r}", ld)
            seen_hosts[h] = ld.line
        lans.append(lan)

    reserved = {CommandAndControl.name, "api.met.no"} | {h for hs in CLOUD_HOSTS.values() for h in hs}
    clash = sorted(set(seen_hosts) & reserved)
    if clash:
        raise r.fail(f"host name(s) reserved for simulated services: {', '.join(clash)}", doc)

    infected = r.seq(doc.get("infected"), "infected", doc.line)
    for h in infected:
        if h not in seen_hosts:
            raise r.fail(f"infected host {h!r} is not declared on any LAN", infected)

    regions = {lan.region for lan in lans}
    commands = []
    for cd in r.seq(doc.get("commands"), "commands", doc.line):
        cd = r.mapping(cd, "command", doc.line)
        try:
            op = CommandOp(str(cd.get("op", "")).upper())
        except ValueError:
            raise r.fail(f"command op must be START or STOP, got {cd.get('op')!r}", cd) from None
        region = cd.get("region")
        if region is not None and str(region) not in regions:
            raise r.fail(f"command region {region!r} matches no LAN", cd)
        try:
            cmd = BotCommand(op, r.int(cd, "start_time", minimum=0), r.int(cd, "duration", 0, minimum=0),
                             None if region is None else str(region))
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise r.fail(str(exc), cd) from None
        bots = cd.get("bots")
        if bots is not None:
            for h in r.seq(bots, "bots", cd.line):
                if h not in seen_hosts:
                    raise r.fail(f"command names unknown host {h!r}", cd)
                if h not in infected:
                    raise r.fail(f"command names host {h!r}, which is not infected", cd)
            bots = list(bots)
        commands.append(CommandSpec(cmd, bots))

    topology = None
    if "topology" in doc:
        topology = _topology(r, doc["topology"], base_dir, doc.line)
        devices = {d.name for lan in lans for d in lan.devices}
        missing = [c for c in topology.irrigated if c not in devices]
        if missing:
            shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
            raise r.fail(f"irrigated consumer(s) without a device instance: {shown}", doc)

    det = r.mapping(doc.get("detection", {}), "detection", doc.line)
    default_periods = [p for p in (0, 300, 600, 900) if p <= horizon]
    periods = [int(p) for p in r.seq(det.get("periods", default_periods), "periods", _line(det, doc.line))]
    if any(p < 0 for p in periods):
        raise r.fail("detection periods must be non-negative", det, doc.line)
    if periods and max(periods) > horizon:
        raise r.fail("detection period longer than the horizon", det, doc.line)
    scan_mode = r.str(doc, "scan_mode", "concurrent")
    if scan_mode not in ("concurrent", "sequential"):
        raise r.fail("scan_mode must be concurrent or sequential", doc)

    return Scenario(
        seed=seed, horizon=horizon, lans=lans, infected=list(infected), commands=commands,
        topology=topology, tariff=r.num(doc, "tariff", 8.0, minimum=0.0), w=r.num(doc, "w", SPRINKLER_FLOW, minimum=0.0),
        detection_periods=periods, detection_trials=r.int(det, "trials", 200, minimum=1),
        consumption_period=r.int(doc, "consumption_period", 3600, minimum=1),
        monitor_threshold=r.num(doc, "monitor_threshold", 0.5, minimum=0.0),
        assess_hours=r.num(doc, "assess_hours", 1.0, minimum=0.0),
        scan_period=r.int(doc, "scan_period", 900, minimum=0), scan_mode=scan_mode,
        infect_at=r.int(doc, "infect_at", 0, minimum=0),
        attacks=_attacks(r, doc["attacks"]) if "attacks" in doc else None,
        name=str(doc.get("name", Path(source).stem)),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists() and not path.is_absolute() and (DATA_DIR / path).exists():
        path = DATA_DIR / path
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", None, str(path)) from None
    return parse_scenario(text, str(path), path.parent)


def bundled(name: str) -> Path:
    return DATA_DIR / name


# -- world construction ----------------------------------------------------

@dataclass
class World:
    sim: Simulation
    labels: dict[str, Optional[IrrigationKind]]
    devices: dict[str, IrrigationDevice]
    bots: dict[str, Bot]
    cnc: CommandAndControl
    cloud: GreenIqCloud
    weather: WeatherService


def _make_device(spec: DeviceSpec) -> IrrigationDevice:
    o = dict(spec.options)
    common = {k: o[k] for k in ("sessions", "zone_flow") if k in o}
    if spec.kind is IrrigationKind.GREENIQ:
        dev = GreenIqDevice(spec.name, plans=o["plans"], ssh_enabled=o["ssh_enabled"], **common)
        dev.state.user_id = o["user_id"]
        return dev
    if spec.kind is IrrigationKind.RAINMACHINE:
        return RainMachineDevice(spec.name, base_plan=o["base_plan"], location=o.get("location", (LONDON.lat, LONDON.lon)),
                                 model=o.get("model"), **common)
    return BlueSprayDevice(spec.name, plans=o["plans"], zone_count=o["zone_count"], **common)


def build_world(scenario: Scenario, seed: int, *, attack: bool = False) -> World:
    """Instantiate every host; with ``attack`` the infected hosts start
    their reconnaissance and the C&C issues the scenario's commands."""
    sim = Simulation(seed)
    cloud = GreenIqCloud()
    weather = WeatherService()
    cnc = CommandAndControl()
    for host in (cloud, weather, cnc):
        sim.add_host(host)
    for kind, hosts in CLOUD_HOSTS.items():
        for h in hosts:
            if h not in sim.hosts:
                sim.add_host(CloudService(h))
    labels: dict[str, Optional[IrrigationKind]] = {}
    devices: dict[str, IrrigationDevice] = {}
    bots: dict[str, Bot] = {}
    infected = set(scenario.infected)
    for lan_spec in scenario.lans:
        sim.add_lan(Lan(lan_spec.id, lan_spec.region, latency=lan_spec.latency))
        for spec in lan_spec.devices:
            dev = _make_device(spec)
            sim.add_host(dev, lan_spec.id)
            devices[spec.name] = dev
            labels[spec.name] = spec.kind
            if spec.kind is IrrigationKind.GREENIQ:
                for t, plans in spec.options.get("updates", ()):
                    cloud.user_update(dev.state.user_id, t, plans)
        for bg in lan_spec.background:
            sim.add_host(BackgroundDevice(bg.name, bg.profile), lan_spec.id)
            labels[bg.name] = None
        for h in lan_spec.hosts:
            bot = Bot(h, attacks=scenario.attacks)
            sim.add_host(bot, lan_spec.id)
            bots[h] = bot
            if h in infected:
                cnc.enroll(bot)
    sim.start()
    if attack:
        for name in sorted(cnc.bots):
            bot = cnc.bots[name]
            sim.schedule(lambda b=bot: b.scan(sim, scenario.scan_period, mode=scenario.scan_mode),
                         scenario.infect_at)
        for spec in scenario.commands:
            if spec.bots is None:
                cnc.issue(sim, spec.command)
            else:
                chosen = [cnc.bots[b] for b in spec.bots]
                sim.schedule(lambda c=spec.command, bs=chosen: broadcast(sim, c, bs, cnc.log),
                             spec.command.start_time)
    return World(sim, labels, devices, bots, cnc, cloud, weather)
