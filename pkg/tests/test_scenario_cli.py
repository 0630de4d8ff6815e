"""Scenario documents and the command line: parsing, round trips, field-path
errors, exit codes, CSV output."""

import csv
import json
import math

import pytest

from slipwalk.cli import EXIT_CONFIG, EXIT_FALL, EXIT_OK, main, write_csv
from slipwalk.scenario import ScenarioError, emit_scenario, parse_scenario
from slipwalk.simulate import run_scenario


def test_empty_document_is_the_default_scenario():
    s = parse_scenario("{}")
    assert s.velocity == (0.3, 0.0)
    assert s.duration == 10.0
    assert s.vertical.mass == 14.5
    assert s.horizontal.step_width == 0.15
    assert s.gait.step_duration == 0.7
    assert s.terrain.height_at(1.0) == 0.0


def test_round_trip_is_stable():
    doc = {
        "terrain": {"kind": "stairs", "rises": [0.02, 0.03, -0.02], "tread": 0.36, "x_start": 0.35},
        "velocity": {"vx": 0.6, "vy": 0.0},
        "duration": 8.0,
        "pushes": [{"start": 3.0, "duration": 0.1, "force": [40.0, 0.0, 0.0]}],
        "gait": {"foot_height": 0.06},
        "seed": 5,
    }
    s1 = parse_scenario(json.dumps(doc))
    text1 = emit_scenario(s1)
    s2 = parse_scenario(text1)
    assert emit_scenario(s2) == text1
    assert s2.velocity == s1.velocity
    assert s2.gait.foot_height == 0.06
    assert s2.pushes == s1.pushes
    assert s2.terrain.height_at(1.0) == s1.terrain.height_at(1.0)


def test_all_terrain_kinds_parse():
    slope = parse_scenario('{"terrain": {"kind": "slope", "angle_deg": 15, "x_start": 0.35, "length": 8.0}}')
    assert slope.terrain.height_at(1.35) == pytest.approx(math.tan(math.radians(15.0)))
    wave = parse_scenario(
        json.dumps(
            {
                "terrain": {
                    "kind": "wave",
                    "x_start": 0.0,
                    "sections": [{"angle_deg": 15, "length": 1.0}, {"angle_deg": -15, "length": 1.0}],
                }
            }
        )
    )
    assert wave.terrain.height_at(2.5) == pytest.approx(0.0, abs=1e-12)
    flat = parse_scenario('{"terrain": {"kind": "flat", "height": 0.1}}')
    assert flat.terrain.height_at(0.0) == 0.1


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ("not json", "invalid JSON"),
        ('{"bogus": 1}', "unknown keys"),
        ('{"velocity": {"vx": "fast"}}', "velocity.vx"),
        ('{"duration": -1}', "duration"),
        ('{"terrain": {"kind": "cliff"}}', "terrain.kind"),
        ('{"terrain": {"kind": "stairs", "rises": []}}', "terrain.rises"),
        ('{"pushes": [{"start": 99.0, "duration": 0.1, "force": [1, 0, 0]}]}', "pushes[0].start"),
        ('{"pushes": [{"start": 1.0, "duration": 0.1, "force": [1, 0]}]}', "pushes[0].force"),
        ('{"gait": {"step_duration": -0.5}}', "gait.step_duration"),
        ('{"vertical": {"mass": 0}}', "vertical.mass"),
        ('{"seed": 1.5}', "seed"),
        ('{"version": 99}', "version"),
        ('{"planner_decimation": 0}', "planner_decimation"),
    ],
)
def test_errors_carry_field_paths(doc, fragment):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(doc)
    assert fragment in str(err.value)


def test_csv_writer_round_trips_the_log(tmp_path):
    log = run_scenario(parse_scenario('{"duration": 0.5}'))
    path = tmp_path / "log.csv"
    write_csv(log, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == log.columns
    assert len(rows) == len(log.rows) + 1
    assert float(rows[1][rows[0].index("com_z")]) == pytest.approx(0.715, abs=1e-6)


def test_cli_run_writes_csv_and_exits_zero(tmp_path, capsys):
    scenario_path = tmp_path / "s.json"
    scenario_path.write_text('{"duration": 1.0}')
    out_path = tmp_path / "out.csv"
    code = main(["run", "--scenario", str(scenario_path), "--out", str(out_path)])
    assert code == EXIT_OK
    assert out_path.exists()
    captured = capsys.readouterr()
    assert "outcome: completed" in captured.out


def test_cli_run_reports_falls(tmp_path, capsys):
    scenario_path = tmp_path / "fall.json"
    scenario_path.write_text('{"duration": 3.0, "gait": {"fall_offset": 0.1}}')
    code = main(["run", "--scenario", str(scenario_path)])
    assert code == EXIT_FALL
    assert "outcome: fall" in capsys.readouterr().out


def test_cli_rejects_bad_configuration(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"terrain": {"kind": "cliff"}}')
    assert main(["run", "--scenario", str(bad)]) == EXIT_CONFIG
    assert main(["run", "--scenario", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_template_is_parseable(capsys):
    assert main(["template"]) == EXIT_OK
    text = capsys.readouterr().out
    scenario = parse_scenario(text)
    assert scenario.duration == 10.0


def test_cli_bench_smoke(capsys):
    assert main(["bench", "--iters", "5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "warm_p99_ms" in out and "cold_p99_ms" in out
