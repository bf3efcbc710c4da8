import json

import numpy as np
import pytest

from rollpid.cli import main
from rollpid.controller import PidGains, PidMemory
from rollpid.plant import Trajectory, example_plant, rollout
from rollpid.rolling import Mode, RollingRecord, run
from rollpid.scenario_io import (SHIPPED, ScenarioError, emit_records_table, emit_trajectory_csv,
                                 fmt4, parse_scenario, scenario_from_text, shipped_scenario_text,
                                 write_bundle)

MINIMAL = "mode = rolling_exact\ny_r = 2\nn_horizon = 10\nm_sample = 10\nk0 = 0.1, 0.1, 0.1\n"


def test_shipped_case1_matches_the_example_setup():
    sc = parse_scenario("case1_n10.scn")
    assert sc.mode is Mode.ROLLING_EXACT
    assert (sc.y_r, sc.n_horizon, sc.m_sample) == (2.0, 10, 10)
    assert sc.k0 == PidGains(0.1, 0.1, 0.1)
    assert sc.plant.params == (0.5, 0.3, 1.8, 0.9)
    assert tuple(sc.plant.x0) == (1.0, 1.0)
    assert sc.criterion.value == "ise"


@pytest.mark.parametrize("name", SHIPPED)
def test_every_shipped_scenario_parses(name):
    sc = parse_scenario(name)
    assert sc.n_horizon == sc.m_sample


def test_minimal_scenario_uses_defaults():
    sc = scenario_from_text(MINIMAL)
    assert sc.s_max == 20 and sc.law == "place" and sc.input_delay == 1


def test_comments_and_blank_lines_are_ignored():
    sc = scenario_from_text("# header\n\n" + MINIMAL.replace("y_r = 2", "y_r = 3  # target"))
    assert sc.y_r == 3.0


@pytest.mark.parametrize("text, needle", [
    (MINIMAL.replace("n_horizon = 10", "n_horizon = 0"), "n_horizon"),
    (MINIMAL + "foo = 1\n", "'foo'"),
    (MINIMAL + "y_r = 1\n", "duplicate"),
    (MINIMAL.replace("k0 = 0.1, 0.1, 0.1\n", ""), "k0"),
    (MINIMAL + "this line is broken\n", ":6:"),
    (MINIMAL.replace("y_r = 2", "y_r = two"), "'y_r'"),
    (MINIMAL.replace("k0 = 0.1, 0.1, 0.1", "k0 = 0.1, 0.1"), "3 entries"),
    (MINIMAL + "plant = tank\n", "plant"),
    (MINIMAL + "reset_memory_on_update = maybe\n", "reset_memory_on_update"),
])
def test_invalid_scenarios_are_rejected(text, needle):
    with pytest.raises(ScenarioError, match=needle):
        scenario_from_text(text)


def test_missing_required_keys_are_all_listed():
    with pytest.raises(ScenarioError) as info:
        scenario_from_text("y_r = 2\n")
    for key in ("mode", "n_horizon", "m_sample", "k0"):
        assert key in str(info.value)


@pytest.mark.parametrize("value, text", [
    (0.00005, "0.0000"), (0.00015, "0.0002"), (0.00025, "0.0002"), (-0.00001, "0.0000"),
    (-0.0, "0.0000"), (1.60485, "1.6048"), (2.0, "2.0000"), (-1.23456, "-1.2346"),
])
def test_fmt4_rounds_half_even(value, text):
    assert fmt4(value) == text


def test_records_table_layout():
    recs = [RollingRecord(1, PidGains(0, 0, 0), np.zeros(2), 0.0)]
    lines = emit_records_table(recs).splitlines()
    assert lines[0].split() == ["s", "|", "Kp", "Ki", "Kd", "|", "x1", "x2", "|", "y"]
    assert lines[1].split() == ["1", "|", "0.0000", "0.0000", "0.0000", "|", "0.0000", "0.0000",
                                "|", "0.0000"]
    with pytest.raises(ValueError):
        emit_records_table([])


def test_converged_run_ends_with_repeated_row():
    result = run(parse_scenario("case2_n10.scn"))
    rows = [line.split()[1:] for line in emit_records_table(result.records).splitlines()[-2:]]
    assert rows[0] == rows[1]
    assert rows[-1][-1] == "2.0000"


def test_trajectory_csv(tmp_path):
    traj, _ = rollout(example_plant(), PidGains(0, 0, 0), PidMemory(), [1, 1], 2.0, 3)
    path = tmp_path / "t.csv"
    emit_trajectory_csv(traj, [(0.0, 0.0, 0.0)] * 3, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "k,x1,x2,u,y,e,s,kp,ki,kd"
    rows = [list(map(float, line.split(","))) for line in lines[1:]]
    np.testing.assert_allclose([r[1:3] for r in rows], [[1, 1], [0.5, 0.3], [0.075, 0.075]])
    np.testing.assert_allclose([r[4] for r in rows], [1.8 - 0.9, 1.8 * 0.3 - 0.9 * 0.25, 1.8 * 0.075 - 0.9 * 0.075 ** 2])
    assert [r[0] for r in rows] == [1, 2, 3]


def test_empty_trajectory_csv_is_header_only(tmp_path):
    path = tmp_path / "t.csv"
    emit_trajectory_csv(Trajectory.empty(2), [], path)
    assert path.read_text() == "k,x1,x2,u,y,e,s,kp,ki,kd\n"


def test_csv_write_failure_names_the_path(tmp_path):
    with pytest.raises(OSError, match="nope"):
        emit_trajectory_csv(Trajectory.empty(2), [], tmp_path / "nope" / "t.csv")


def test_bundles_are_byte_identical_on_rerun(tmp_path):
    text = shipped_scenario_text("case2_n10.scn")
    sc = scenario_from_text(text, "case2_n10.scn")
    for out in ("a", "b"):
        write_bundle(run(sc), sc, text, tmp_path / out)
    for name in ("records.txt", "trajectory.csv", "models.txt", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = json.loads((tmp_path / "a" / "meta.json").read_text())
    assert meta["terminated_by"] == "gain_fixed_point" and meta["mode"] == "rolling_sysid"


def test_cli_run_writes_bundle(tmp_path, capsys):
    assert main(["run", "--scenario", "case1_n10.scn", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trajectory.csv").is_file()
    assert "terminated by gain_fixed_point" in capsys.readouterr().out


def test_cli_run_accepts_a_file_path(tmp_path):
    scn = tmp_path / "mine.scn"
    scn.write_text(MINIMAL + "s_max = 2\n")
    assert main(["run", "--scenario", str(scn), "--out", str(tmp_path / "out")]) == 0
    assert len((tmp_path / "out" / "records.txt").read_text().splitlines()) == 3


def test_cli_run_reports_missing_file(tmp_path, capsys):
    code = main(["run", "--scenario", "missing.scn", "--out", str(tmp_path)])
    assert code != 0
    assert "not found" in capsys.readouterr().err


def test_cli_run_reports_bad_scenario(tmp_path, capsys):
    scn = tmp_path / "bad.scn"
    scn.write_text(MINIMAL + "foo = 1\n")
    assert main(["run", "--scenario", str(scn), "--out", str(tmp_path)]) == 2
    assert "'foo'" in capsys.readouterr().err


def test_cli_tables(capsys):
    assert main(["tables"]) == 0
    out = capsys.readouterr().out
    blocks = [b for b in out.split("\n\n") if b.strip()]
    assert len(blocks) == 4
    for block in blocks:
        assert block.splitlines()[-1].split()[-1] == "2.0000"


def test_cli_verify(capsys):
    assert main(["verify"]) == 0
    assert capsys.readouterr().out.count("[PASS]") >= 8


def test_cli_rejects_unknown_flag():
    with pytest.raises(SystemExit):
        main(["run", "--frobnicate"])
