import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harness import credential_events, lab
from oracles import seconds_on
from pipingbot.attacks import (YEAR_2022, AttackDirective, AttackKind, replay_schedule, spoof_configuration,
                               spoof_weather_location, spoof_weather_values, valve_toggle)
from pipingbot.devices import (BlueSprayDevice, GreenIqDevice, RainMachineDevice, RainMachineState, factory_reset,
                               rainmachine_adapt)
from pipingbot.devices.greeniq import CONFIG_PATH, GREENIQ_HOST, PING_PATH, parse_config_document
from pipingbot.netsim import InterceptAction, Method, TrafficEvent
from pipingbot.plans import DAY, HOUR, WateringPlan
from pipingbot.weather import (ALGERIA, BERGEN, LONDON, WEATHER_HOST, WEATHER_PATH, WeatherForecast,
                               rescale_temperatures)

PLAN = WateringPlan((1,), 0, 10 * DAY, ((21600, 1800),))


def ping(t=0):
    return TrafficEvent(t, "g", GREENIQ_HOST, Method.POST, PING_PATH, {"user_id": "g"})


def forecast_reply(climate=LONDON, t=0):
    req = TrafficEvent(t, "rm", WEATHER_HOST, Method.GET, WEATHER_PATH, {"lat": climate.lat, "lon": climate.lon})
    return req.response(climate.forecast(t).to_payload())


def pcts(payload):
    state = RainMachineState("rm", PLAN)
    return rainmachine_adapt(state, WeatherForecast.from_payload(payload))


# -- configuration spoofing -------------------------------------------------------

def test_spoof_ping_fabricates_timestamp():
    out = spoof_configuration(ping(), 0, 86400)
    assert out.action is InterceptAction.FABRICATED
    assert out.injected.payload == {"timestamp": 86400}
    assert out.injected.src == GREENIQ_HOST and out.injected.dst_host == "g"


def test_spoof_configxml_is_continuous_plan():
    req = TrafficEvent(0, "g", GREENIQ_HOST, Method.GET, CONFIG_PATH, {})
    out = spoof_configuration(req, 100, 5000)
    plans = parse_config_document(out.injected.payload)
    assert {p.zones for p in plans} == {(1, 2, 3, 4, 5, 6, 7, 8)}
    assert all(p.start == 100 and p.end == 5000 and p.schedule == ((0, DAY),) for p in plans)


def test_spoof_leaves_weather_alone():
    req = TrafficEvent(0, "g", WEATHER_HOST, Method.GET, WEATHER_PATH, {"lat": 1, "lon": 2})
    assert spoof_configuration(req, 0, 10).action is InterceptAction.PASS


def test_injection_makes_device_water_immediately():
    sim, dev, _ = lab(GreenIqDevice("g"), attack=(AttackKind.SPOOF_CONFIG, {}), start=600, end=600 + DAY)
    trace = sim.run_until(1800)
    fetches = [e for e in trace if e.path == CONFIG_PATH and e.is_request and e.src == "g"]
    assert fetches and 600 <= fetches[0].time <= 660
    assert dev.consumption(660, 1800) == pytest.approx(8 * 2.795 * (1800 - 660) / 3600, rel=0.06)


def test_directive_validation():
    with pytest.raises(ValueError):
        AttackDirective(AttackKind.SPOOF_CONFIG, 10, 10)
    with pytest.raises(ValueError):
        AttackDirective(AttackKind.VALVE_TOGGLE, 0, 10, {"period": 0})


# -- permanent DoS --------------------------------------------------------------

def user_plan(t):
    return [WateringPlan((t % 8 + 1,), t, t + DAY, ((0, 600),))]


def dos_run(update_times, attack, horizon, reset_at=None):
    sim, dev, bot = lab(GreenIqDevice("g"), attack=(AttackKind.PERMANENT_DOS, {}) if attack else None,
                        start=300, end=horizon)
    cloud = sim.hosts[GREENIQ_HOST]
    for t in update_times:
        cloud.user_update("g", t, user_plan(t))
    if reset_at is not None:
        def reset():
            sim.clear_mitm("home")
            factory_reset(dev.state, sim.now)
        sim.schedule(reset, reset_at)
    sim.run_until(horizon)
    return dev


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 40), min_size=1, max_size=6, unique=True))
def test_permanent_dos_ignores_every_later_update(slots):
    horizon = 12 * HOUR
    times = sorted(600 + s * 900 for s in slots)
    attacked = dos_run(times, True, horizon)
    baseline = dos_run(times, False, horizon)
    assert attacked.state.accepted_updates == [YEAR_2022]
    assert set(times) <= set(baseline.state.accepted_updates)
    assert attacked.state.current_config == YEAR_2022
    for t in times:
        assert attacked.state.history.at(t + 120) == attacked.state.history.at(400)


def test_factory_reset_restores_updates():
    dev = dos_run([1200, 6000], True, 3 * HOUR, reset_at=3600)
    # 1200 is only picked up once the reset clears the latch
    assert dev.state.accepted_updates == [YEAR_2022, 1200, 6000]
    assert dev.state.history.at(3500) != tuple(user_plan(1200))
    assert dev.state.history.at(3700) == tuple(user_plan(1200))


# -- weather injection -----------------------------------------------------------

def test_value_spoof_london_to_hot():
    reply = forecast_reply()
    assert all(p == 0 for p in pcts(reply.payload).values())
    out = spoof_weather_values(reply, (0.0, 50.0), 0.0)
    assert out.action is InterceptAction.MODIFIED
    forged = WeatherForecast.from_payload(out.injected.payload)
    temps = [e.temperature for e in forged.entries]
    assert min(temps) == pytest.approx(0.0) and max(temps) == pytest.approx(50.0)
    assert all(e.precipitation == 0 for e in forged.entries)
    assert all(p > 0 for p in pcts(out.injected.payload).values())


def test_value_spoof_identity():
    reply = forecast_reply(ALGERIA)
    temps = [e["temperature"] for e in reply.payload["entries"]]
    out = spoof_weather_values(reply, (min(temps), max(temps)), None)
    assert out.injected.payload == reply.payload
    assert pcts(out.injected.payload) == pcts(reply.payload)


def test_value_spoof_heavy_rain_stops_watering():
    reply = forecast_reply(ALGERIA)
    temps = [e["temperature"] for e in reply.payload["entries"]]
    out = spoof_weather_values(reply, (min(temps), max(temps)), 50.0)
    assert all(p == 0 for p in pcts(out.injected.payload).values())


def test_value_spoof_only_touches_forecast_replies():
    req = TrafficEvent(0, "rm", WEATHER_HOST, Method.GET, WEATHER_PATH, {"lat": 1, "lon": 2})
    assert spoof_weather_values(req, (0, 50), 0).action is InterceptAction.PASS
    bad = req.response({"garbage": True})
    assert spoof_weather_values(bad, (0, 50), 0).action is InterceptAction.PASS


def location_run(fake, seed=4):
    params = {"fake": fake} if fake is not None else None
    attack = (AttackKind.WEATHER_LOCATION, params) if params else None
    sim, dev, _ = lab(RainMachineDevice("rm", base_plan=PLAN), seed=seed, attack=attack, start=0, end=2 * DAY)
    sim.run_until(DAY)
    return dev


def test_location_spoof_to_algeria_waters():
    base = location_run(None)
    hot = location_run((ALGERIA.lat, ALGERIA.lon))
    assert all(p == 0 for p in base.state.percentages.values())
    assert hot.state.percentages and all(p > 0 for p in hot.state.percentages.values())
    assert hot.state.location == (LONDON.lat, LONDON.lon)
    assert hot.consumption(0, DAY) > base.consumption(0, DAY) == 0


def test_location_spoof_identity_and_rainier():
    base = location_run(None)
    same = location_run((LONDON.lat, LONDON.lon))
    wet = location_run((BERGEN.lat, BERGEN.lon))
    assert same.state.percentages == base.state.percentages
    assert all(wet.state.percentages[d] <= base.state.percentages[d] for d in base.state.percentages)


def test_location_spoof_needs_coordinates():
    req = TrafficEvent(0, "rm", WEATHER_HOST, Method.GET, WEATHER_PATH, {"city": "x"})
    assert spoof_weather_location(req, (0, 0)).action is InterceptAction.PASS
    req = TrafficEvent(0, "rm", WEATHER_HOST, Method.GET, WEATHER_PATH, {"lat": 1.0, "lon": 2.0})
    out = spoof_weather_location(req, (3.0, 4.0))
    assert out.injected.payload == {"lat": 3.0, "lon": 4.0}


# -- pass-through soundness ----------------------------------------------------------

hosts = st.sampled_from(["www.greeniq.net", WEATHER_HOST, "proxy1.rainmachine.com", "cdn.example", "g", "rm"])
paths = st.sampled_from([PING_PATH, CONFIG_PATH, WEATHER_PATH, "/", "/api/schedule"])


@settings(max_examples=300, deadline=None)
@given(hosts, hosts, st.sampled_from(list(Method)), paths, st.booleans())
def test_spoofs_pass_outside_their_predicates(src, dst, method, path, is_reply):
    req = TrafficEvent(0, src, dst, method, path, {"lat": 1.0, "lon": 2.0})
    event = req.response(forecast_reply().payload) if is_reply else req
    cfg = spoof_configuration(event, 0, 10)
    if not (not is_reply and dst == GREENIQ_HOST and (method, path) in
            ((Method.POST, PING_PATH), (Method.GET, CONFIG_PATH))):
        assert cfg.action is InterceptAction.PASS
    val = spoof_weather_values(event, (0, 50), 0)
    if not (is_reply and dst == WEATHER_HOST and path == WEATHER_PATH):
        assert val.action is InterceptAction.PASS
    loc = spoof_weather_location(event, (0, 0))
    if not (not is_reply and dst == WEATHER_HOST and path == WEATHER_PATH):
        assert loc.action is InterceptAction.PASS


# -- replay and valves ---------------------------------------------------------------

def test_replay_without_credentials():
    sim, dev, bot = lab(BlueSprayDevice("bs"))
    week = WateringPlan((1, 2, 3), 0, 7 * DAY, ((0, DAY),))
    sim.run_until(100)
    assert replay_schedule(sim, "bot", "bs", week)
    assert dev.state.history.zone_windows(0, 7 * DAY)[1] == [(100, DAY)] + [(d * DAY, (d + 1) * DAY) for d in range(1, 7)]
    assert credential_events(sim.trace, "bot") == []
    assert replay_schedule(sim, "bot", "bs", week)
    assert len(dev.state.plans) == 1


def test_replay_against_greeniq_fails():
    sim, dev, bot = lab(GreenIqDevice("g"))
    assert not replay_schedule(sim, "bot", "g", WateringPlan((1,), 0, DAY, ((0, 10),)))


def valve_changes(trace, bot="bot"):
    replies = {e.reply_to: e for e in trace if not e.is_request}
    return [(e.time, e.payload["bits"]) for e in trace
            if e.is_request and e.src == bot and e.method is Method.SSH_EXEC
            and replies[e.event_id].payload.get("status") == "ok"]


def test_valve_toggle_thirty_seconds():
    sim, dev, bot = lab(GreenIqDevice("g"))
    sim.run_until(1000)
    assert valve_toggle(sim, "bot", "g", 10, 60)
    sim.run_until(2000)
    changes = valve_changes(sim.trace)
    assert seconds_on(changes, 1, 0, 2000) == 30
    assert dev.state.valve_log.zone_windows(0, 2000) == {1: [(1000, 1010), (1020, 1030), (1040, 1050)]}
    assert dev.open_seconds(0, 2000) == 30


def test_valve_toggle_zero_duration_and_ssh_off():
    sim, dev, bot = lab(GreenIqDevice("g"))
    before = len(sim.trace)
    assert valve_toggle(sim, "bot", "g", 10, 0)
    sim.run_until(100)
    assert not [e for e in sim.trace[before:] if e.src == "bot"]
    sim, dev, bot = lab(GreenIqDevice("g", ssh_enabled=False))
    assert not valve_toggle(sim, "bot", "g", 10, 60)
    sim.run_until(200)
    assert dev.consumption(0, 200) == 0


# -- effectiveness ---------------------------------------------------------------------

CASES = [
    (lambda: GreenIqDevice("g", plans=[PLAN]), (AttackKind.SPOOF_CONFIG, {}), 3600, 7200),
    (lambda: GreenIqDevice("g", plans=[PLAN]), (AttackKind.PERMANENT_DOS, {}), 3600, 7200),
    (lambda: RainMachineDevice("rm", base_plan=WateringPlan((1,), 0, 2 * DAY, ((64800, 1800),))),
     (AttackKind.WEATHER_VALUE, {"band": (0.0, 50.0), "rain": 0.0}), 0, 2 * DAY),
    (lambda: RainMachineDevice("rm", base_plan=WateringPlan((1,), 0, 2 * DAY, ((64800, 1800),))),
     (AttackKind.WEATHER_LOCATION, {"fake": (ALGERIA.lat, ALGERIA.lon)}), 0, 2 * DAY),
    (lambda: BlueSprayDevice("bs", plans=[PLAN]), (AttackKind.SCHEDULE_REPLAY, {}), 3600, 7200),
    (lambda: GreenIqDevice("g", plans=[PLAN]), (AttackKind.VALVE_TOGGLE, {"period": 10}), 3600, 3660),
]


@pytest.mark.parametrize("make, attack, start, end", CASES, ids=[c[1][0].value for c in CASES])
def test_attack_beats_baseline(make, attack, start, end):
    sim, base, _ = lab(make(), seed=9)
    sim.run_until(end + 60)
    sim, hit, _ = lab(make(), seed=9, attack=attack, start=start, end=end)
    sim.run_until(end + 60)
    assert hit.consumption(start, end) > base.consumption(start, end)
