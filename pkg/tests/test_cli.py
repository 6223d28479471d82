import json
import subprocess
import sys

import pytest

from pblearn.cli import main
from pblearn.games import random_instance, save_game


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(f"N = 3\nT = 10\nn_seeds = 2\nout_dir = {tmp_path / 'out'}\n")
    return p


def test_run_writes_outputs(cfg, tmp_path, capsys):
    assert main(["run", "--config", str(cfg), "--seeds", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n_runs"] == 3
    out = tmp_path / "out"
    assert (out / "ensemble_summary.json").exists() and (out / "error_median.csv").exists()
    assert len(list((out / "runs").glob("run_*.csv"))) == 3


def test_run_schedule_override(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("N = 2\nT = 3\nn_seeds = 1\ngamma_a = 0.4\n")
    assert main(["run", "--config", str(p)]) == 2
    assert "sum_gamma2_converges" in capsys.readouterr().err
    assert main(["run", "--config", str(p), "--override-schedule-check"]) == 0


def test_solve_ne(cfg, capsys):
    assert main(["solve-ne", "--config", str(cfg)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["equilibria"]) == 1 and doc["residuals"][0] <= 1e-10
    assert doc["best_response_gaps"][0] <= 1e-6


@pytest.mark.parametrize("check,sigmas", [("score", ["0.5"]), ("mixed", ["0.5"]), ("bias", ["0.4", "0.2", "0.1"])])
def test_diagnose(tmp_path, capsys, check, sigmas):
    save_game(random_instance(0, 2, d=2), tmp_path / "g.json")
    argv = ["diagnose", "--game", str(tmp_path / "g.json"), "--check", check, "--sigma", *sigmas, "--samples", "2000"]
    assert main(argv) == 0
    assert json.loads(capsys.readouterr().out)


def test_diagnose_refuses_few_samples(tmp_path, capsys):
    save_game(random_instance(0, 2, d=2), tmp_path / "g.json")
    argv = ["diagnose", "--game", str(tmp_path / "g.json"), "--check", "score", "--sigma", "0.5", "--samples", "10"]
    assert main(argv) == 2


def test_validate_schedule_exit_codes(capsys):
    assert main(["validate-schedule", "--gamma-a", "0.51", "--sigma-a", "0.2"]) == 0
    assert json.loads(capsys.readouterr().out) == {"valid": True, "violated": []}
    assert main(["validate-schedule", "--gamma-a", "0.51", "--sigma-a", "0.1"]) == 1
    assert json.loads(capsys.readouterr().out)["violated"] == ["sum_gamma_sigma3_converges"]


def test_missing_config_is_an_error(tmp_path):
    assert main(["solve-ne", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "pblearn.cli", "validate-schedule", "--gamma-a", "0.4", "--sigma-a", "0.2"],
        capture_output=True, text=True,
    )
    assert out.returncode == 1 and "sum_gamma2_converges" in out.stdout
