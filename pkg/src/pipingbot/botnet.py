"""Bots, their C&C server, and the infection -> reconnaissance -> attack cycle."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .attacks import AttackDirective, AttackKind, DirectiveRunner, runner_for
from .detector import DEFAULT_TABLE, LiveDetector, Verdict
from .devices.common import IrrigationKind
from .netsim import Host, InterceptOutcome, Method, Simulation, TrafficEvent

logger = logging.getLogger(__name__)

CNC_HOST = "cnc.botnet.example"
NOTIFY_PATH = "/notify"


class BotState(str, Enum):
    INFECTED = "Infected"
    SCANNING = "Scanning"
    ARMED = "Armed"
    ATTACKING = "Attacking"
    DESTROYED = "Destroyed"


class CommandOp(str, Enum):
    START = "START"
    STOP = "STOP"


@dataclass(frozen=True)
class BotCommand:
    op: CommandOp
    start_time: int
    duration: int = 0
    region: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "op", CommandOp(self.op))
        if self.op is CommandOp.START and self.duration <= 0:
            raise ValueError("START needs a positive duration")

    @property
    def end_time(self) -> int:
        return self.start_time + self.duration


@dataclass(frozen=True)
class CncLink:
    bot: str
    transport: str = "secure channel"


# which attack each kind of device gets unless the scenario says otherwise
DEFAULT_ATTACKS: Mapping[IrrigationKind, tuple[tuple[AttackKind, dict], ...]] = {
    IrrigationKind.GREENIQ: ((AttackKind.PERMANENT_DOS, {}),),
    IrrigationKind.RAINMACHINE: ((AttackKind.WEATHER_VALUE, {"band": (0.0, 50.0), "rain": 0.0}),),
    IrrigationKind.BLUESPRAY: ((AttackKind.SCHEDULE_REPLAY, {}),),
}


class Bot(Host):
    """A compromised LAN host acting on C&C orders."""

    def __init__(self, name: str, *, attacks: Mapping[IrrigationKind, Iterable[tuple[AttackKind, dict]]] | None = None):
        self.name = name
        self.state = BotState.INFECTED
        self.targets: list[tuple[str, IrrigationKind]] = []
        self.verdicts: dict[str, Verdict] = {}
        self.attacks = dict(DEFAULT_ATTACKS if attacks is None else attacks)
        self.runners: list[DirectiveRunner] = []
        self.destroyed_at: Optional[int] = None
        self.armed_at: Optional[int] = None
        self._detectors: list[LiveDetector] = []

    @property
    def link(self) -> CncLink:
        return CncLink(self.name)

    @property
    def armed(self) -> bool:
        return self.state in (BotState.ARMED, BotState.ATTACKING)

    # -- reconnaissance -----------------------------------------------------

    def scan(self, sim: Simulation, period: int, *, mode: str = "concurrent") -> None:
        """Start watching every other host on the LAN.

        ``concurrent`` watches all hosts in one window of ``period`` seconds;
        ``sequential`` watches them one after another (a budget of
        ``period`` per host).
        """
        if self.state is not BotState.INFECTED:
            raise RuntimeError(f"{self.name} cannot scan from state {self.state.value}")
        if mode not in ("concurrent", "sequential"):
            raise ValueError(f"unknown scan mode {mode!r}")
        lan = sim.lan_of(self.name)
        others = sorted(lan.hosts - {self.name}) if lan else []
        if not others:
            self._destroy(sim)
            return
        self.state = BotState.SCANNING
        sim.set_mitm(lan, self.name, others, self._intercept)
        if mode == "concurrent":
            remaining = set(others)

            def done(host: str, verdict: Verdict) -> None:
                self._record(sim, host, verdict)
                remaining.discard(host)
                if not remaining:
                    self._finish_scan(sim)

            self._detectors = [LiveDetector(sim, h, period, done, DEFAULT_TABLE) for h in others]
        elif mode == "sequential":
            queue = list(others)

            def step(host: str | None = None, verdict: Verdict | None = None) -> None:
                if host is not None:
                    self._record(sim, host, verdict)
                if queue:
                    nxt = queue.pop(0)
                    self._detectors.append(LiveDetector(sim, nxt, period, step, DEFAULT_TABLE))
                else:
                    self._finish_scan(sim)

            step()

    def _record(self, sim: Simulation, host: str, verdict: Verdict) -> None:
        self.verdicts[host] = verdict
        if verdict.result is not None:
            self.targets.append((host, verdict.result))
            if self.state is BotState.SCANNING:
                self.state = BotState.ARMED
                self.armed_at = sim.now

    def _finish_scan(self, sim: Simulation) -> None:
        self._detectors = []
        lan = sim.lan_of(self.name)
        if not self.targets:
            self._destroy(sim)
            return
        # keep the MITM position only on the controllers found
        sim.set_mitm(lan, self.name, [h for h, _ in self.targets], self._intercept)

    def _destroy(self, sim: Simulation) -> None:
        lan = sim.lan_of(self.name)
        if lan is not None and lan.mitm is not None and lan.mitm.interceptor == self.name:
            sim.clear_mitm(lan)
        sim.send(TrafficEvent(sim.now, self.name, CNC_HOST, Method.POST, NOTIFY_PATH,
                              {"bot": self.name, "status": "no-target"}, session=sim.new_session()))
        self.state = BotState.DESTROYED
        self.destroyed_at = sim.now

    # -- attack -------------------------------------------------------------

    def _intercept(self, event: TrafficEvent) -> Optional[InterceptOutcome]:
        for runner in self.runners:
            if runner.active:
                outcome = runner.intercept(event)
                if not runner.active:
                    # a stopped runner may finish its clean-up on this packet
                    self._settle()
                if outcome is not None and outcome.action.value != "pass":
                    return outcome
        return None

    def directives_for(self, start: int, end: int) -> list[tuple[str, AttackDirective]]:
        out = []
        for host, kind in self.targets:
            for attack_kind, params in self.attacks.get(kind, ()):
                out.append((host, AttackDirective(attack_kind, start, end, dict(params))))
        return out

    def begin(self, sim: Simulation, cmd: BotCommand) -> list[DirectiveRunner]:
        if not self.armed:
            return []
        started = []
        for host, directive in self.directives_for(cmd.start_time, cmd.end_time):
            runner = runner_for(directive, self.name, host)
            self.runners.append(runner)
            runner.activate(sim)
            started.append(runner)
            sim.schedule(lambda r=runner: r.stop(sim) if r.active else None, directive.end)
        self.state = BotState.ATTACKING
        sim.schedule(lambda: self._settle(), cmd.end_time)
        return started

    def halt(self, sim: Simulation) -> None:
        for runner in self.runners:
            if runner.active:
                runner.stop(sim)
        self._settle()

    def _settle(self) -> None:
        if self.state is BotState.ATTACKING and not any(r.active for r in self.runners):
            self.state = BotState.ARMED


@dataclass
class CommandLogEntry:
    op: str
    start_time: int
    duration: int
    region: Optional[str]
    activated: int

    def to_record(self) -> dict:
        return {"op": self.op, "start_time": self.start_time, "duration": self.duration,
                "region": self.region, "activated": self.activated}


@dataclass
class CommandAndControl(Host):
    """Single central C&C server."""

    name: str = CNC_HOST
    bots: dict[str, Bot] = field(default_factory=dict)
    log: list[CommandLogEntry] = field(default_factory=list)
    notifications: list[str] = field(default_factory=list)

    def enroll(self, bot: Bot) -> None:
        self.bots[bot.name] = bot

    def handle_request(self, sim: Simulation, request: TrafficEvent) -> Optional[dict]:
        if request.path == NOTIFY_PATH:
            self.notifications.append(str(request.payload.get("bot")))
        return {"status": "ok"}

    def issue(self, sim: Simulation, cmd: BotCommand) -> None:
        """Deliver ``cmd`` to every bot when the clock reaches its start time."""
        sim.schedule(lambda: broadcast(sim, cmd, self.bots.values(), self.log), cmd.start_time)


def reconnaissance(sim: Simulation, bot: Bot, period: int, *, mode: str = "concurrent") -> Bot:
    """Start a bot's LAN scan; its state settles as the simulation runs."""
    bot.scan(sim, period, mode=mode)
    return bot


def broadcast(sim: Simulation, cmd: BotCommand, bots: Iterable[Bot],
              log: list[CommandLogEntry] | None = None) -> set[str]:
    """Apply ``cmd`` to ``bots``; returns the names of the bots it affected.

    START activates exactly the armed bots in ``cmd.region`` (every armed bot
    when no region is given). STOP ends every running directive.
    """
    affected: set[str] = set()
    for bot in sorted(bots, key=lambda b: b.name):
        if bot.state is BotState.DESTROYED:
            continue
        lan = sim.lan_of(bot.name)
        if cmd.region is not None and (lan is None or lan.region != cmd.region):
            continue
        if cmd.op is CommandOp.START:
            if bot.armed:
                bot.begin(sim, cmd)
                affected.add(bot.name)
        elif any(r.active for r in bot.runners):
            bot.halt(sim)
            affected.add(bot.name)
    if log is not None:
        log.append(CommandLogEntry(cmd.op.value, cmd.start_time, cmd.duration, cmd.region, len(affected)))
    return affected
