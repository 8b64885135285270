import json

import pytest

from wkelly import synthetic_universe, write_prices
from wkelly.cli import main


@pytest.fixture(scope="module")
def prices(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "p.csv"
    write_prices(synthetic_universe(5, 80, seed=2), str(path))
    return str(path)


@pytest.fixture(scope="module")
def short_prices(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "short.csv"
    write_prices(synthetic_universe(3, 6, seed=2), str(path))
    return str(path)


def test_optimize_json(prices, capsys):
    assert main(["optimize", "--prices", prices, "--delta", "0.1", "--p", "2", "--norm", "l2",
                 "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert {"weights", "epsilon", "objective", "status"} <= set(doc)
    assert sum(doc["weights"].values()) == pytest.approx(1.0)


def test_sweep_csv(prices, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--prices", prices, "--deltas", "0,0.1,0.2,0.3,0.4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 6 and lines[0].startswith("delta,epsilon")


def test_check_duality(capsys):
    assert main(["check-duality", "--seed", "7", "--instances", "5"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("max_gap=") and float(line.split("=")[1]) <= 1e-5


def test_backtest_and_robust_objective(prices, short_prices, capsys):
    assert main(["backtest", "--prices", prices, "--train-days", "40", "--deltas", "0,0.2",
                 "--format", "csv"]) == 0
    assert capsys.readouterr().out.splitlines()[0].startswith("label,delta,annualized_return")
    assert main(["robust-objective", "--prices", short_prices, "--weights", "0.2,0.3,0.5",
                 "--epsilon", "0.001"]) == 0
    assert "robust_objective" in json.loads(capsys.readouterr().out)


def test_study_synthetic(capsys):
    argv = ["study", "--synthetic-assets", "6", "--train-days", "30", "--test-days", "20",
            "--trials", "2", "--subset-size", "3", "--deltas", "0,0.2", "--seed", "3"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv + ["--threads", "2"]) == 0
    assert capsys.readouterr().out == first


@pytest.mark.parametrize("argv,code", [
    (["optimize", "--prices", "x.csv", "--delta", "1", "--epsilon", "1"], 1),
    (["optimize", "--prices", "missing.csv", "--delta", "0.1"], 3),
    (["optimize", "--bogus"], 1),
    (["frobnicate"], 1),
    (["sweep", "--help"], 0),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_missing_radius_names_flags(prices, capsys):
    assert main(["optimize", "--prices", prices]) == 1
    assert "--delta" in capsys.readouterr().err


def test_solver_failure_exit_code(prices, monkeypatch, capsys):
    import wkelly.cli as cli
    from wkelly.errors import SolverFailure

    def boom(*a, **k):
        raise SolverFailure("stopped", None)

    monkeypatch.setattr(cli, "solve_wkelly", boom)
    assert main(["optimize", "--prices", prices, "--delta", "0.1"]) == 2
