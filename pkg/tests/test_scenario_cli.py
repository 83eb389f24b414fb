import csv
import json

import pytest

from pipingbot.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, ConfigError, main, parse_phases
from pipingbot.scenario import ScenarioError, bundled, load_scenario, parse_scenario

SMALL = """\
name: small
seed: 7
horizon: 10800
detection: {periods: [0, 900], trials: 2}
lans:
  - id: home
    region: A
    devices:
      - name: greeniq-1
        kind: GreenIQ
        plans:
          - {zones: [1], start: 0, end: 10800, schedule: [[7200, 1800]]}
      - name: bluespray-1
        kind: BlueSpray
        plans:
          - {zones: [2], start: 0, end: 10800, schedule: [[3600, 600]]}
    background:
      - {name: phone, class: smartphone}
    hosts: [pc]
infected: [pc]
commands:
%s
topology: |
  [reservoirs]
  tower 100
  [consumers]
  greeniq-1 irrigated
  bluespray-1 irrigated
  [pipes]
  tower greeniq-1 5
  tower bluespray-1 5
"""


def write(tmp_path, text, name="s.scenario"):
    path = tmp_path / name
    path.write_text(text)
    return path


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- loading -----------------------------------------------------------------------

def test_table1_fixture():
    sc = load_scenario(bundled("table1.scenario"))
    assert len(sc.device_specs) == 1355
    assert len(sc.lans) == 1355
    assert len(sc.topology.irrigated) == 1355


def test_empty_file(tmp_path):
    with pytest.raises(ScenarioError, match="empty"):
        load_scenario(write(tmp_path, ""))


def test_unknown_host_in_command_is_named():
    text = SMALL % "  - {op: START, start_time: 10, duration: 5, bots: [ghost]}"
    with pytest.raises(ScenarioError, match="ghost") as info:
        parse_scenario(text, "s.scenario")
    assert info.value.line is not None


@pytest.mark.parametrize("patch, message", [
    (("infected: [pc]", "infected: [nobody]"), "nobody"),
    (("seed: 7", "seed: 7\nseed: 8"), "duplicate key"),
    (("  bluespray-1 irrigated", "  bluespray-1 irrigated\n  ghost-7 irrigated"), "ghost-7"),
    (("periods: [0, 900]", "periods: [0, 99999]"), "horizon"),
    (("kind: BlueSpray", "kind: BlueSpray\n        zone_count: 30"), "zone"),
    (("hosts: [pc]", "hosts: [phone]"), "phone"),
])
def test_validation_errors(patch, message):
    text = (SMALL % "  - {op: STOP, start_time: 0}").replace(*patch)
    with pytest.raises(ScenarioError, match=message) as info:
        parse_scenario(text, "s.scenario")
    assert str(info.value).startswith("s.scenario")


def test_nested_counts():
    text = """\
seed: 1
horizon: 3600
lans:
  - count: 2
    id: "h{i}"
    background:
      - {count: 2, as: j, name: "cam-{i}-{j}", class: camera}
"""
    sc = parse_scenario(text)
    assert [lan.id for lan in sc.lans] == ["h1", "h2"]
    assert [b.name for b in sc.lans[1].background] == ["cam-2-1", "cam-2-2"]
    with pytest.raises(ScenarioError, match="count"):
        parse_scenario(text.replace("count: 2\n", "count: -1\n"))


def test_seed_override_changes_only_seed():
    sc = load_scenario(bundled("regional.scenario"))
    other = sc.with_seed(99)
    assert other.seed == 99 and sc.seed == 4242 and other.lans is sc.lans


# -- phases and exit codes -----------------------------------------------------------

def test_phase_parsing():
    assert parse_phases("all") == ["simulate", "detect", "attack", "assess"]
    assert parse_phases("assess,simulate") == ["simulate", "assess"]
    with pytest.raises(ConfigError):
        parse_phases("attack")
    with pytest.raises(ConfigError):
        parse_phases("simulate,explode")


def test_assess_on_table1(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--scenario", "table1.scenario", "--phases", "assess", "--out", str(out)]) == EXIT_OK
    doc = json.loads((out / "damage.json").read_text())
    assert doc["report"]["wasted_water"] == pytest.approx(3787.2, abs=0.5)
    assert doc["max_flow"]["Dinic"] == doc["max_flow"]["EdmondsKarp"]
    assert json.loads(capsys.readouterr().out)["wasted_water_m3"] == pytest.approx(3787.2, abs=0.5)
    assert sorted(json.loads((out / "manifest.json").read_text())["files"]) == ["damage.json"]


def test_exit_codes(tmp_path, capsys):
    ok = write(tmp_path, SMALL % "  - {op: STOP, start_time: 0}")
    assert main(["--scenario", str(tmp_path / "missing.scenario")]) == EXIT_CONFIG
    assert main(["--scenario", str(write(tmp_path, "", "e.scenario"))]) == EXIT_CONFIG
    assert main(["--scenario", str(ok), "--phases", "attack"]) == EXIT_CONFIG
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--scenario", str(ok), "--phases", "assess", "--out", str(blocker / "sub")]) == EXIT_RUNTIME
    assert main(["--scenario", str(ok), "--phases", "assess", "--out", str(tmp_path / "o")]) == EXIT_OK
    err = capsys.readouterr().err
    assert "config error" in err and "runtime error" in err


def test_stop_at_zero_equals_baseline(tmp_path):
    path = write(tmp_path, SMALL % "  - {op: STOP, start_time: 0}")
    out = tmp_path / "out"
    assert main(["--scenario", str(path), "--phases", "simulate,attack,assess", "--out", str(out)]) == EXIT_OK
    diff = rows(out / "differential.csv")
    assert diff and all(float(r["difference"]) == 0 for r in diff)
    assert (out / "consumption.csv").read_text() == (out / "attack_consumption.csv").read_text()
    assert (out / "anomalies.jsonl").read_text() == ""


def test_full_run_bundle_layout(tmp_path):
    path = write(tmp_path, SMALL % "  - {op: START, start_time: 3600, duration: 3600}")
    out = tmp_path / "out"
    assert main(["--scenario", str(path), "--out", str(out)]) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert names == {"trace.jsonl", "consumption.csv", "features.jsonl", "accuracy.csv", "verdicts.jsonl",
                     "attack_trace.jsonl", "attack_consumption.csv", "differential.csv", "anomalies.jsonl",
                     "commands.jsonl", "bots.jsonl", "damage.json", "manifest.json"}
    diff = {int(r["period_start"]): float(r["difference"]) for r in rows(out / "differential.csv")}
    assert diff[3600] > 0 and diff[0] == 0
    flagged = [json.loads(line)["period_start"] for line in (out / "anomalies.jsonl").read_text().splitlines()]
    assert 3600 in flagged
    acc = rows(out / "accuracy.csv")
    assert float(acc[-1]["accuracy"]) == 1.0
    [bot] = [json.loads(line) for line in (out / "bots.jsonl").read_text().splitlines()]
    assert bot["state"] in ("Armed", "Attacking") and bot["targets"]


def test_identical_runs_identical_bundles(tmp_path):
    path = write(tmp_path, SMALL % "  - {op: START, start_time: 3600, duration: 3600}")
    for d in ("a", "b"):
        assert main(["--scenario", str(path), "--out", str(tmp_path / d)]) == EXIT_OK
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name
    assert main(["--scenario", str(path), "--out", str(tmp_path / "c"), "--seed-override", "8"]) == EXIT_OK
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() != (tmp_path / "c" / "trace.jsonl").read_bytes()
