import json
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ["DBLAB_BIN"]
SOURCE = Path(os.environ["DBLAB_SOURCE"])
CONFIGS = SOURCE / "configs"
GOLDEN = SOURCE / "tests" / "golden"


def run(*args):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)


def config_with(tmp_path, name, edit):
    cfg = json.loads((CONFIGS / name).read_text())
    edit(cfg)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def first_line(path):
    return path.read_text().splitlines()[0]


def test_missing_config_is_io_error(tmp_path):
    r = run("solve", "--config", tmp_path / "absent.json")
    assert r.returncode == 1
    assert "absent.json" in r.stderr


def test_invalid_prior_is_validation_error(tmp_path):
    path = config_with(tmp_path, "fig1.json", lambda c: c["agent"].update(p_bar=1.2))
    r = run("solve", "--config", path)
    assert r.returncode == 2
    assert "p_bar" in r.stderr


def test_coarse_grid_is_validation_error():
    r = run("verify", "--config", CONFIGS / "fig1.json", "--dt", 0.5)
    assert r.returncode == 2
    assert "grid" in r.stderr


def test_unknown_flag_is_validation_error():
    r = run("solve", "--config", CONFIGS / "fig1.json", "--bogus")
    assert r.returncode == 2


def test_unwritable_output_is_output_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    r = run("solve", "--config", CONFIGS / "fig1.json", "--out", blocker / "sub")
    assert r.returncode == 4


def test_solve_reference_schedule(tmp_path):
    r = run("solve", "--config", CONFIGS / "fig1.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    s = json.loads((tmp_path / "schedule.json").read_text())
    assert abs(s["tau2"] - 0.7) < 1e-3
    assert s["structure"] == "THINK_DO"
    assert abs(s["tau1"] + s["tau2"] + s["tau3"] - 1.9) < 1e-8
    for key in ("q_at_switch", "terminal_belief", "thresholds"):
        assert key in s
    assert (tmp_path / "summary.txt").exists()


def test_verify_reference_passes(tmp_path):
    r = run("verify", "--config", CONFIGS / "fig1_T4.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["pass"]
    assert report["comparison"]["max_delta"] <= 5e-3


def test_verify_counterexample_reports_double_think(tmp_path):
    r = run("verify", "--config", CONFIGS / "counterexample.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["double_think"]
    assert len(report["thinking_intervals"]) >= 2
    assert report["thinking_intervals"][0]["start"] == 0.0


def test_sweep_header_and_shape(tmp_path):
    r = run("sweep", "--config", CONFIGS / "fig1.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    csv = tmp_path / "sweep.csv"
    assert first_line(csv) == first_line(GOLDEN / "sweep_header.csv")
    rows = [line.split(",") for line in csv.read_text().splitlines()[1:]]
    assert len(rows) == 29
    tau2 = [float(row[2]) for row in rows]
    assert all(b >= a - 1e-9 for a, b in zip(tau2, tau2[1:]))


def test_sweep_grid_override(tmp_path):
    r = run("sweep", "--config", CONFIGS / "fig1.json", "--variable", "p_bar", "--grid",
            "0.2:0.8:0.2", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    rows = (tmp_path / "sweep.csv").read_text().splitlines()[1:]
    assert [float(row.split(",")[0]) for row in rows] == pytest.approx([0.2, 0.4, 0.6, 0.8])


def test_simulate_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        r = run("simulate", "--config", CONFIGS / "fig1.json", "--reps", 20000, "--seed", 5,
                "--out", out)
        assert r.returncode == 0, r.stderr
    assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()
    assert first_line(a / "simulate.csv") == first_line(GOLDEN / "simulate_header.csv")
    c = tmp_path / "c"
    run("simulate", "--config", CONFIGS / "fig1.json", "--reps", 20000, "--seed", 6, "--out", c)
    assert (a / "simulate.csv").read_bytes() != (c / "simulate.csv").read_bytes()


def test_trajectory_starts_in_neither_state(tmp_path):
    r = run("trajectory", "--config", CONFIGS / "fig1.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == first_line(GOLDEN / "trajectory_header.csv")
    assert lines[1] == "0,0,0,1"
    rows = [list(map(float, line.split(","))) for line in lines[1:]]
    assert rows[-1][0] == pytest.approx(1.9)
    for _, prog, sol, neither in rows:
        assert 0.0 <= sol <= 1.0
        assert 0.0 <= prog <= 1.0
        assert 0.0 <= neither <= 1.0
    neither = [row[3] for row in rows]
    assert all(b <= a + 1e-12 for a, b in zip(neither, neither[1:]))
