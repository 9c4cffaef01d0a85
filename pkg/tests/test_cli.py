import json
import subprocess
import sys

import pytest

from otclass import disintegrate
from otclass import checks
from otclass.cli import main, plan_to_dict

from conftest import example_plans


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def measures(tmp_path):
    mu = write(tmp_path / "mu.json", {"dim": 2, "mode": "float", "atoms": [[0, 0], [1, 0]], "weights": [0.5, 0.5]})
    nu = write(tmp_path / "nu.json", {"dim": 2, "mode": "float", "atoms": [[0, 1], [1, 1]], "weights": [0.25, 0.75]})
    return mu, nu


def test_solve_json(capsys, measures):
    mu, nu = measures
    code, out, _ = run(capsys, "solve", "--cost", "euclidean:1", "--mu", mu, "--nu", nu, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["duality_gap"] <= 1e-7
    assert sum(m for _, _, m in data["plan"]) == pytest.approx(1.0)


def test_solve_table_and_csv(capsys, measures, tmp_path):
    mu, nu = measures
    code, out, _ = run(capsys, "solve", "--cost", "sqeuclidean", "--mu", mu, "--nu", nu, "--format", "table")
    assert code == 0 and out.startswith("value")
    target = tmp_path / "plan.csv"
    code, _, _ = run(capsys, "solve", "--cost", "euclidean", "--mu", mu, "--nu", nu,
                     "--format", "csv", "--out", target)
    assert code == 0 and target.read_text().startswith("i,j,mass\n")


def test_solve_identical_measures(capsys, measures):
    mu, _ = measures
    code, out, _ = run(capsys, "solve", "--cost", "euclidean:1", "--mu", mu, "--nu", mu, "--format", "json")
    assert code == 0 and json.loads(out)["value"] == 0


def test_solve_rational_mode(capsys, tmp_path):
    mu = write(tmp_path / "mu.json", {"dim": 1, "mode": "rational", "atoms": [[0], [1], [2]],
                                      "weights": ["1/3", "1/3", "1/3"]})
    nu = write(tmp_path / "nu.json", {"dim": 1, "mode": "rational", "atoms": [[0], [1]],
                                      "weights": ["1/6", "5/6"]})
    code, out, _ = run(capsys, "solve", "--cost", "euclidean:1", "--mu", mu, "--nu", nu, "--format", "json")
    assert code == 0 and json.loads(out)["value"] == "1/2"


def test_malformed_inputs(capsys, tmp_path, measures):
    mu, _ = measures
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "solve", "--cost", "euclidean", "--mu", mu, "--nu", bad)
    assert code == 2 and "--nu" in err
    missing = write(tmp_path / "missing.json", {"dim": 1, "atoms": [[0]]})
    code, _, err = run(capsys, "solve", "--cost", "euclidean", "--mu", mu, "--nu", missing)
    assert code == 2 and "weights" in err
    light = write(tmp_path / "light.json", {"dim": 2, "atoms": [[0, 0], [1, 1]], "weights": [0.2, 0.7]})
    code, _, err = run(capsys, "solve", "--cost", "euclidean", "--mu", mu, "--nu", light)
    assert code == 2
    code, _, _ = run(capsys, "solve", "--cost", "euclidean")
    assert code == 2


def test_cost_file(capsys, tmp_path):
    mu = write(tmp_path / "mu.json", {"dim": 1, "atoms": [[0], [1]], "weights": [0.5, 0.5]})
    cost = write(tmp_path / "c.json", {"cost": "matrix", "rows": [[0, 3], [2, 0]]})
    code, out, _ = run(capsys, "solve", "--cost", cost, "--mu", mu, "--nu", mu, "--format", "json")
    assert code == 0 and json.loads(out)["value"] == 0
    wrong = write(tmp_path / "w.json", {"cost": "matrix"})
    code, _, err = run(capsys, "solve", "--cost", wrong, "--mu", mu, "--nu", mu)
    assert code == 2 and "rows" in err


def plan_files(tmp_path):
    plans = example_plans()
    paths = {}
    for name, plan in plans.items():
        paths[name] = write(tmp_path / f"{name}.json", plan_to_dict(plan))
    return plans, paths


def test_classify_example_plans(capsys, tmp_path):
    _, paths = plan_files(tmp_path)
    code, out, _ = run(capsys, "classify", "--plan", *paths.values(), "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["classes"] == [["f", "g"], ["h"], ["k"]]
    assert data["meta_distances"]["f~k"] != 0


def test_classify_meta_tolerance_in_float_mode(capsys, tmp_path):
    _, paths = plan_files(tmp_path)
    plans = [paths[k] for k in "fhk"]
    code, out, _ = run(capsys, "classify", "--plan", *plans, "--mode", "float", "--format", "json")
    assert json.loads(out)["classes"] == [["f"], ["h"], ["k"]]
    # every pairwise distance is at most 2/15
    code, out, _ = run(capsys, "classify", "--plan", *plans, "--mode", "float",
                       "--tol", "meta=0.2", "--format", "json")
    assert code == 0 and json.loads(out)["classes"] == [["f", "h", "k"]]


def test_tolerance_override_validation(capsys, tmp_path):
    _, paths = plan_files(tmp_path)
    for bad in ["meta=0", "meta=-1", "meta=abc", "meta", "speed=1"]:
        code, _, err = run(capsys, "classify", "--plan", paths["f"], "--tol", bad)
        assert code == 2 and "--tol" in err


def test_classify_single_and_round_trip(capsys, tmp_path):
    plans, paths = plan_files(tmp_path)
    code, out, _ = run(capsys, "classify", "--plan", paths["h"], "--format", "json")
    assert json.loads(out)["classes"] == [["h"]]
    disint = write(tmp_path / "h_map.json", disintegrate(plans["h"]).to_dict())
    code, out, _ = run(capsys, "classify", "--plan", paths["h"], "--plan", disint, "--format", "json")
    assert code == 0 and json.loads(out)["classes"] == [["h", "h_map"]]


def test_classify_source_mismatch(capsys, tmp_path):
    _, paths = plan_files(tmp_path)
    other = write(tmp_path / "other.json", {
        "source": {"dim": 1, "mode": "rational", "atoms": [[5]], "weights": ["1"]},
        "target": {"dim": 1, "mode": "rational", "atoms": [[0]], "weights": ["1"]},
        "matrix": [["1"]],
    })
    code, _, err = run(capsys, "classify", "--plan", paths["f"], other)
    assert code == 2 and "source" in err


def meta_file(tmp_path, name, atoms, weights):
    return write(tmp_path / name, {
        "atoms": [{"dim": len(a[0][0]), "mode": "rational", "atoms": [p for p, _ in a],
                   "weights": [w for _, w in a]} for a in atoms],
        "weights": weights,
    })


def test_class_solve_product_class(capsys, tmp_path):
    mu = write(tmp_path / "mu.json", {"dim": 1, "mode": "rational", "atoms": [[0], [1], [2]],
                                      "weights": ["1/3", "1/3", "1/3"]})
    lam = meta_file(tmp_path, "lam.json", [[([0], "1/6"), ([1], "5/6")]], ["1"])
    code, out, _ = run(capsys, "class-solve", "--cost", "euclidean:1", "--mu", mu, "--lambda", lam,
                       "--format", "json")
    assert code == 0 and json.loads(out)["gap"] == 0


def test_class_solve_degenerate_flag(capsys, tmp_path):
    mu = write(tmp_path / "mu.json", {"dim": 2, "mode": "rational",
                                      "atoms": [[1, 0], [0, 1], [-1, 2], [2, -1]],
                                      "weights": ["1/4"] * 4})
    lam = meta_file(tmp_path, "lam.json",
                    [[([1, 0], "1/2"), ([-1, 0], "1/2")], [([0, 0], "1")]], ["1/2", "1/2"])
    code, out, _ = run(capsys, "class-solve", "--cost", "inner", "--mu", mu, "--lambda", lam,
                       "--format", "table")
    assert code == 0 and "degenerate" in out


def test_class_solve_infeasible(capsys, tmp_path):
    mu = write(tmp_path / "mu.json", {"dim": 1, "mode": "rational", "atoms": [[0], [1]],
                                      "weights": ["1/2", "1/2"]})
    lam = meta_file(tmp_path, "lam.json", [[([0], "1")], [([1], "1")]], ["1/3", "2/3"])
    code, out, _ = run(capsys, "class-solve", "--cost", "euclidean", "--mu", mu, "--lambda", lam,
                       "--format", "json")
    assert code == 4
    assert json.loads(out)["feasible_maps_exist"] is False


def test_demo(capsys, tmp_path):
    code, out, _ = run(capsys, "demo", "--out", tmp_path, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["verdicts"] == {"f~g": True, "f~h": False, "h~k": False, "f~k": False}
    assert all(data["second_marginals"].values())
    assert data["mk_value"] == "1/2"
    fig1 = (tmp_path / "same_class.dot").read_text()
    fig2 = (tmp_path / "two_splits.dot").read_text()
    assert "cluster_f" in fig1 and "cluster_g" in fig1
    assert "cluster_h" in fig2 and "cluster_k" in fig2
    code, again, _ = run(capsys, "demo", "--out", tmp_path, "--format", "json")
    assert again == out


@pytest.mark.parametrize("suite", ["duality", "monotonicity", "barycenter-lipschitz", "twist", "push-lemma"])
def test_check_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "check", suite, "--trials", "10", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["passed"] and data["trials"] == 10


def test_check_is_deterministic(capsys):
    a = run(capsys, "check", "barycenter-lipschitz", "--trials", "15", "--seed", "4", "--format", "json")
    b = run(capsys, "check", "barycenter-lipschitz", "--trials", "15", "--seed", "4", "--format", "json")
    assert a == b
    assert json.loads(a[1])["max_violation"] <= 1e-7


def test_check_bad_arguments(capsys, tmp_path):
    # sampled separable factors cannot be differentiated
    flat = write(tmp_path / "flat.json", {"cost": "separable", "a": [1], "b": [1]})
    assert run(capsys, "check", "twist", "--trials", "3", "--cost", flat)[0] == 2
    assert run(capsys, "check", "twist", "--trials", "0")[0] == 2


def test_check_violation_exit_code(capsys, monkeypatch):
    def broken(rng, trials, cost):
        return 0.5, {"trial": 3}

    monkeypatch.setitem(checks.SUITES, "duality", (broken, 1e-7))
    code, out, _ = run(capsys, "check", "duality", "--trials", "5", "--format", "json")
    assert code == 1
    data = json.loads(out)
    assert not data["passed"] and data["witness"] == {"trial": 3}
    code, _, _ = run(capsys, "check", "duality", "--trials", "5", "--tol", "dual=1")
    assert code == 0


def test_unknown_command_and_suite(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "check", "nope")[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "otclass", "demo", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["classes"] == [["f", "g"], ["h"], ["k"]]
