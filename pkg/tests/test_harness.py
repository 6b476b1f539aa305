import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clfcascade import cli
from clfcascade.closed_loop import TrajectoryLog
from clfcascade.errors import ScenarioError
from clfcascade.harness import (
    CSV_COLUMNS,
    EXIT_ERROR,
    EXIT_FAIL,
    EXIT_PASS,
    OUTPUT_ENV,
    PRESETS,
    export_csv,
    load_scenario,
    parse_scenario,
    preset_text,
    read_csv,
    run_experiment,
    run_scenario,
    serialize_scenario,
)

MINIMAL = """\
program: {theta_m: 0.015, omega: 0.3, pitch_target: 0.347207}
gains: {a1: -0.5, a2: -1.0, a3: -2.0, a4: -1.0}
thrust: [[0.0, 36718.0]]
initial: {on_manifold: true, v: 90.0, h: 3000.0}
"""


def test_minimal_file_gets_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.dt == 1e-3 and sc.t_final == 30.0 and sc.plant == "simplified"
    assert sc.density_scale == 1.0 and sc.derivatives == "backward" and sc.robustness is None
    assert sc.initial.theta_err == 0.0 and sc.seed == 0


def test_positive_gain_rejected_with_line():
    with pytest.raises(ScenarioError, match=r"line 2: gains.a1: gain must be negative"):
        parse_scenario(MINIMAL.replace("a1: -0.5", "a1: 0.5"))


@pytest.mark.parametrize(
    "edit, pattern",
    [
        (("", "dt: -1.0\n"), "dt must be positive"),
        (("", "t_final: 0.0001\n"), "t_final must exceed dt"),
        (("", "density_scale: 0\n"), "density_scale must be positive"),
        (("", "plant: hybrid\n"), "plant must be"),
        (("", "colour: red\n"), "unknown field"),
        (("36718.0", "1.0e9"), "outside"),
        (("v: 90.0", "v: -5.0"), "airspeed must be positive"),
        (("", "gains: [1, 2\n"), "line"),
    ],
)
def test_validation_errors(edit, pattern):
    old, new = edit
    text = MINIMAL.replace(old, new) if old else MINIMAL + new
    with pytest.raises(ScenarioError, match=pattern):
        parse_scenario(text)


def test_error_names_field_line():
    with pytest.raises(ScenarioError, match=r"line 5: dt"):
        parse_scenario(MINIMAL + "dt: 0\n")


@pytest.mark.parametrize("name", [p for p in PRESETS if p != "demo2d"])
def test_presets_round_trip(name):
    sc = load_scenario(name)
    assert parse_scenario(serialize_scenario(sc)) == sc


@given(st.floats(-5, -0.01), st.floats(1e-4, 1e-2), st.sampled_from(["simplified", "full"]))
def test_round_trip_property(a1, dt, plant):
    sc = parse_scenario(MINIMAL + f"dt: {dt!r}\nplant: {plant}\n").with_value("gains.a1", a1)
    assert parse_scenario(serialize_scenario(sc)) == sc


def test_with_value_paths():
    sc = parse_scenario(MINIMAL)
    assert sc.with_value("aircraft.xp", -1.0).aircraft.xp == -1.0
    assert sc.with_value("program.omega", 0.0).program.omega == 0.0
    with pytest.raises(ScenarioError):
        sc.with_value("gains.a9", -1.0)


def short(text=MINIMAL, **extra):
    body = text + "".join(f"{k}: {v}\n" for k, v in extra.items())
    return parse_scenario(body)


def test_csv_empty_log_is_header_only(tmp_path):
    log = TrajectoryLog.from_rows([], 1e-3)
    p = tmp_path / "e.csv"
    export_csv(log, p)
    assert p.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_csv_round_trip_and_shape(tmp_path):
    sc = short(t_final=0.2, final_error=1.0)
    log = run_scenario(sc)
    p = tmp_path / "t.csv"
    export_csv(log, p)
    with p.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert all(len(r) == 14 for r in rows)
    back = read_csv(p)
    for c in CSV_COLUMNS:
        np.testing.assert_array_equal(np.array(back[c]), log[c].astype(float))
    assert all(r[-1].isdigit() for r in rows[1:])


def test_runs_are_byte_identical(tmp_path):
    sc = short(t_final=0.3)
    for d in ("a", "b"):
        export_csv(run_scenario(sc), tmp_path / f"{d}.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_exit_statuses(tmp_path):
    ok = run_experiment(short(t_final=0.2, final_error=1e-6, name="okrun"), tmp_path)
    assert ok.status == EXIT_PASS
    assert (tmp_path / "okrun" / "trajectory.csv").exists() and (tmp_path / "okrun" / "summary.yaml").exists()
    off = short(MINIMAL.replace("v: 90.0, h: 3000.0", "v: 90.0, h: 3000.0, theta_err: 0.05"), t_final=0.2, final_error=0.01, name="offset")
    assert run_experiment(off, tmp_path).status == EXIT_FAIL
    dead = short(MINIMAL.replace("[[0.0, 36718.0]]", "[[0.0, 36718.0], [0.1, 0.0]]"), t_final=0.5, name="dead")
    res = run_experiment(dead, tmp_path)
    assert res.status == EXIT_ERROR and "NozzleLawSingular" in res.message


def test_robustness_run_writes_verdict(tmp_path):
    text = MINIMAL + "plant: full\nt_final: 0.2\nrobustness: {limits: {theta: 0.01, v: 1.0}}\nname: rb\n"
    res = run_experiment(parse_scenario(text), tmp_path)
    assert res.verdict is not None and res.verdict["verdict"] == "PASS"
    assert (tmp_path / "rb" / "verdict.yaml").exists()
    assert (tmp_path / "rb" / "trajectory_simplified.csv").exists()


def test_cli_env_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    assert cli.main(["demo2d"]) == EXIT_PASS
    assert (tmp_path / "demo2d" / "trajectory_2d.csv").exists()
    f = tmp_path / "s.yaml"
    f.write_text(MINIMAL + "t_final: 0.1\nname: cli_run\n")
    assert cli.main(["run", str(f)]) == EXIT_PASS
    assert (tmp_path / "cli_run" / "trajectory.csv").exists()
    assert cli.main(["sweep", str(f), "--param", "gains.a1", "--values", "-0.3", "-0.6"]) == EXIT_PASS
    assert cli.main(["run", "no-such-thing"]) == EXIT_ERROR
    assert "demo2d" in capsys.readouterr().out


def test_demo2d_preset_text():
    assert "a1" in preset_text("demo2d")
    with pytest.raises(ScenarioError):
        preset_text("nope")


def test_boolean_like_name_rejected():
    with pytest.raises(ScenarioError, match="name: expected a string"):
        parse_scenario(MINIMAL + "name: off\n")
    assert parse_scenario(MINIMAL + 'name: "off"\n').name == "off"
