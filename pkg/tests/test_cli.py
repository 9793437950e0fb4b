import json

import numpy as np
import pytest

from concavefp import lte
from concavefp.cli import main
from concavefp.lower_bound import LowerBoundingMatrix


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line)


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "scn.json"
    assert main(["gen-scenario", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_gen_scenario_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen-scenario", "--seed", "9", "--out", str(a), "--set", "n_users=40"]) == 0
    assert main(["gen-scenario", "--seed", "9", "--out", str(b), "--set", "n_users=40"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert lte.NetworkScenario.load(a).n_users == 40


def test_gen_scenario_seed_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CONCAVEFP_SEED", "9")
    a = tmp_path / "a.json"
    assert main(["gen-scenario", "--out", str(a)]) == 0
    b = tmp_path / "b.json"
    assert main(["gen-scenario", "--seed", "9", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bad_override_is_usage_error(tmp_path):
    assert main(["gen-scenario", "--out", str(tmp_path / "x.json"), "--set", "bogus=1"]) == 1
    assert main(["gen-scenario", "--out", str(tmp_path / "x.json"), "--set", "novalue"]) == 1


def test_unknown_command_exits_1():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 1


def test_missing_file_exits_1(tmp_path):
    assert main(["certify", str(tmp_path / "missing.json")]) == 1


def test_certify_feasible(scenario_file, capsys):
    assert main(["certify", str(scenario_file)]) == 0
    out = kv(capsys.readouterr().out)
    assert out["verdict"] == "FeasibleProven"
    assert out["reason"] == "ModelSpecificIff"
    assert float(out["rho_Mprime"]) < 1
    assert float(out["rho"]) == pytest.approx(float(out["rho_Mprime"]), rel=1e-8)


def test_certify_infeasible_when_demand_scaled(scenario_file, capsys):
    assert main(["certify", str(scenario_file), "--demand-scale", "20"]) == 3
    out = kv(capsys.readouterr().out)
    assert out["verdict"] == "Infeasible"
    assert float(out["rho"]) >= 1


def test_certify_capacity_prune(scenario_file, capsys):
    assert main(["certify", str(scenario_file), "--capacity", "1e-9"]) == 3
    assert kv(capsys.readouterr().out)["reason"] == "CapacityExceeded"


def test_solve_load_standard_vs_accelerated(scenario_file, capsys):
    assert main(["solve-load", str(scenario_file), "--tol", "1e-12"]) == 0
    std = kv(capsys.readouterr().out)
    assert main(["solve-load", str(scenario_file), "--tol", "1e-12", "--accelerated"]) == 0
    acc = kv(capsys.readouterr().out)
    assert std["status"] == acc["status"] == "Converged"
    assert int(acc["iterations"]) < int(std["iterations"])
    x_std = np.array(std["fixed_point"].split(","), float)
    x_acc = np.array(acc["fixed_point"].split(","), float)
    np.testing.assert_allclose(x_acc, x_std, rtol=1e-8)


def test_solve_load_diverges_exit_2(scenario_file, capsys):
    assert main(["solve-load", str(scenario_file), "--demand-scale", "20"]) == 2
    assert kv(capsys.readouterr().out)["status"] == "Diverged"


def test_solve_power_recovers_powers(scenario_file, capsys):
    assert main(["solve-power", str(scenario_file), "--accelerated", "--tol", "1e-13"]) == 0
    out = kv(capsys.readouterr().out)
    p = np.array(out["fixed_point"].split(","), float)
    np.testing.assert_allclose(p, 1.6, rtol=1e-6)


def test_lower_bound_csv(scenario_file, tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["lower-bound", str(scenario_file), "--route", "SupergradientLimit", "--out", str(out)]) == 0
    L = LowerBoundingMatrix.from_csv(out)
    closed = lte.load_matrix(lte.NetworkScenario.load(scenario_file))
    np.testing.assert_allclose(L.M, closed, rtol=1e-6)


def test_lower_bound_stdout(scenario_file, capsys):
    assert main(["lower-bound", str(scenario_file), "--route", "ClosedForm"]) == 0
    lines = capsys.readouterr().out.splitlines()
    n = lte.NetworkScenario.load(scenario_file).n_bs
    assert lines[0] == f"n={n},route=ClosedForm"
    assert len(lines) == n + 1


def test_nme_experiment(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"runs": 2, "budget": 15, "seed": 4, "scenario": {"n_users": 40}}))
    out = tmp_path / "nme.csv"
    assert main(["nme-experiment", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 16
    assert kv(capsys.readouterr().out)["runs"] == "2"


def test_nme_experiment_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["nme-experiment", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 1
