"""CLI behavior: determinism, exit codes, config handling."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from bibdr.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _simulate(runner, out, seed=7):
    return runner.invoke(main, ["simulate", "--scenario", "1", "--seed",
                                str(seed), "--periods", "2",
                                "--sites-per-period", "4", "--out", str(out)])


def test_version(runner):
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0
    assert "bibdr" in res.output


def test_simulate_deterministic(runner, tmp_path):
    r1 = _simulate(runner, tmp_path / "a")
    r2 = _simulate(runner, tmp_path / "b")
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert (tmp_path / "a/micro.csv").read_bytes() == \
        (tmp_path / "b/micro.csv").read_bytes()
    assert (tmp_path / "a/truth.csv").read_bytes() == \
        (tmp_path / "b/truth.csv").read_bytes()
    header = (tmp_path / "a/micro.csv").read_text().splitlines()[0]
    assert header == "t,site,s1,s2,x,z_star"


def test_simulate_bad_scenario_exit_2(runner, tmp_path):
    res = runner.invoke(main, ["simulate", "--scenario", "9",
                               "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_unknown_config_key_exit_2(runner, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario: 1\nbogus_key: 3\n")
    res = runner.invoke(main, ["simulate", "--config", str(cfg),
                               "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "bogus_key" in res.output


def test_fit_deterministic_and_manifest(runner, tmp_path):
    assert _simulate(runner, tmp_path / "sim").exit_code == 0
    args = ["fit", "--data", str(tmp_path / "sim/micro.csv"),
            "--iterations", "80", "--burn-in", "30", "--knots", "3",
            "--seed", "3"]
    cfg = tmp_path / "fit.yaml"
    cfg.write_text("thresholds: [1, 4]\n")
    r1 = runner.invoke(main, args + ["--config", str(cfg),
                                     "--out", str(tmp_path / "f1")])
    r2 = runner.invoke(main, args + ["--config", str(cfg),
                                     "--out", str(tmp_path / "f2")])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0
    for name in ("surface.csv", "draws.csv", "draws.bin"):
        assert (tmp_path / "f1" / name).read_bytes() == \
            (tmp_path / "f2" / name).read_bytes()
    manifest = json.loads((tmp_path / "f1/manifest.json").read_text())
    assert manifest["command"] == "fit"
    assert manifest["config"]["iterations"] == 80
    assert manifest["config"]["seed"] == 3


def test_fit_flag_overrides_config(runner, tmp_path):
    assert _simulate(runner, tmp_path / "sim").exit_code == 0
    cfg = tmp_path / "fit.yaml"
    cfg.write_text("thresholds: [2]\niterations: 80\nburn_in: 30\n"
                   "knots: 3\nseed: 1\n")
    res = runner.invoke(main, ["fit", "--config", str(cfg), "--data",
                               str(tmp_path / "sim/micro.csv"),
                               "--iterations", "60",
                               "--out", str(tmp_path / "f")])
    assert res.exit_code == 0, res.output
    manifest = json.loads((tmp_path / "f/manifest.json").read_text())
    assert manifest["config"]["iterations"] == 60


def test_fit_missing_column_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,site,s1,s2\n0,0,0.1,0.2\n")
    res = runner.invoke(main, ["fit", "--data", str(bad),
                               "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "x" in res.output and "z_star" in res.output


def test_replicate_smoke_and_headers(runner, tmp_path):
    res = runner.invoke(main, [
        "replicate", "--scenario", "2", "-R", "2", "--iterations", "60",
        "--burn-in", "20", "--knots", "3", "--periods", "2",
        "--sites-per-period", "4", "--seed", "1",
        "--out", str(tmp_path / "rep")])
    assert res.exit_code == 0, res.output
    mse = (tmp_path / "rep/mse_by_threshold.csv").read_text().splitlines()
    assert mse[0] == "method,threshold,mean,lo,hi"
    cov = (tmp_path / "rep/coverage.csv").read_text().splitlines()
    assert cov[0] == "method,threshold,cp_percent,al"
    raw = (tmp_path / "rep/replication_raw.csv").read_text().splitlines()
    assert raw[0] == "method,replication,threshold,mse"
    assert len(raw) == 1 + 2 * 2 * 7  # methods x reps x thresholds
    meta = json.loads((tmp_path / "rep/study_meta.json").read_text())
    assert meta["R"] == 2 and meta["scenario"] == 2
    cps = [float(line.split(",")[2]) for line in cov[1:]]
    assert all(0.0 <= cp <= 100.0 for cp in cps)


def test_check_linalg_suite(runner):
    res = CliRunner().invoke(main, ["check", "--suite", "linalg"])
    assert res.exit_code == 0, res.output
    assert "PASS" in res.output
