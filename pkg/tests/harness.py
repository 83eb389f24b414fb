"""Small single-LAN worlds for attack tests: one device, one bot."""
from __future__ import annotations

from pipingbot.botnet import Bot, BotCommand, BotState
from pipingbot.devices import CLOUD_HOSTS, CloudService, GreenIqCloud
from pipingbot.netsim import Host, Lan, Simulation
from pipingbot.weather import WeatherService

# words that would betray a login or token exchange in a request
CREDENTIAL_MARKERS = ("password", "passwd", "token", "auth", "login", "credential", "cookie", "apikey")


class Plain(Host):
    def __init__(self, name: str):
        self.name = name


def lab(device, *, seed: int = 1, attack=None, start: int = 0, end: int = 0, bot_name: str = "bot"):
    """Build, start and return (sim, device, bot).

    ``attack`` is an (AttackKind, params) pair; the bot is pre-armed against
    the device and starts the directive at ``start`` for ``end - start``.
    """
    sim = Simulation(seed)
    sim.add_lan(Lan("home", "A"))
    sim.add_host(GreenIqCloud())
    sim.add_host(WeatherService())
    for hosts in CLOUD_HOSTS.values():
        for h in hosts:
            if h not in sim.hosts:
                sim.add_host(CloudService(h))
    sim.add_host(device, "home")
    attacks = {device.kind: (attack,)} if attack else {}
    bot = sim.add_host(Bot(bot_name, attacks=attacks), "home")
    sim.start()
    if attack:
        bot.targets = [(device.name, device.kind)]
        bot.state = BotState.ARMED
        sim.set_mitm("home", bot_name, [device.name], bot._intercept)
        sim.schedule(lambda: bot.begin(sim, BotCommand("START", start, end - start)), start)
    return sim, device, bot


def credential_events(trace, host: str) -> list:
    out = []
    for e in trace:
        if host not in (e.src, e.dst_host, e.via):
            continue
        text = (e.path + " " + " ".join(str(k) for k in e.payload)).lower()
        if any(m in text for m in CREDENTIAL_MARKERS):
            out.append(e)
    return out
