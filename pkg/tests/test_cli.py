import csv
import io
import json
import math

import numpy as np
import pytest

from weylclt.charfn import OperatorBacked, translate
from weylclt.cli import main
from weylclt.fock import FockSpace, make_state
from weylclt.io import matrix_to_json, state_from_spec


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def vacuum_spec(tmp_path):
    return write(tmp_path / "vac.json", {"d": 1, "cutoff": 16, "state": {"kind": "vacuum"}})


@pytest.fixture
def photon_spec(tmp_path):
    return write(tmp_path / "one.json", {"d": 1, "cutoff": 16, "state": {"kind": "number", "n": 1}})


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gauss_check(tmp_path, capsys):
    code, out, _ = run(capsys, "gauss-check", write(tmp_path / "q.json", {"Q": [[0.5, 0], [0, 0.5]]}))
    assert code == 0 and json.loads(out)["admissible"] is True
    code, out, _ = run(capsys, "gauss-check", write(tmp_path / "q3.json", [[0.3, 0], [0, 0.3]]))
    rep = json.loads(out)
    assert code == 1 and rep["witness"]["value"] < 0
    bad = tmp_path / "bad.json"
    bad.write_text('{"Q": [[0.5, 0], [0, ')
    code, _, err = run(capsys, "gauss-check", bad)
    assert code == 2 and "invalid JSON" in err


def test_bochner(tmp_path, capsys, vacuum_spec):
    code, out, _ = run(capsys, "bochner", vacuum_spec, "--random", 5, "--seed", 3)
    assert code == 0 and json.loads(out)["passed"]
    gauss = write(tmp_path / "g.json", {"d": 1, "charfn": {"kind": "gaussian", "a": 0.3}})
    code, out, _ = run(capsys, "bochner", gauss, "--search", "--trials", 2000)
    rep = json.loads(out)
    assert code == 1 and rep["min_eigenvalue"] < -1e-4 and len(rep["points"]) >= 2
    code, _, _ = run(capsys, "bochner", vacuum_spec, "--points", write(tmp_path / "p0.json", []))
    assert code == 2
    code, _, _ = run(capsys, "bochner", vacuum_spec, "--points", write(tmp_path / "p1.json", [[1, 2, 3, 4]]))
    assert code == 2
    code, out, _ = run(capsys, "bochner", vacuum_spec, "--points", write(tmp_path / "p2.json", [[0, 0], [1, 1]]))
    assert code == 0


def test_charfn_grid(tmp_path, capsys, vacuum_spec):
    code, out, _ = run(capsys, "charfn-grid", vacuum_spec, "--half-width", 1, "--count", 3)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["x1", "y1", "re", "im"] and len(rows) == 10
    assert [float(v) for v in rows[5]] == [0, 0, 1, 0]

    z0 = [0.5, -0.25]
    coh = write(tmp_path / "coh.json", {"d": 1, "cutoff": 40, "state": {"kind": "coherent", "z0": z0}})
    out_file = tmp_path / "grid.csv"
    code, _, _ = run(capsys, "charfn-grid", coh, "--count", 5, "--out", out_file)
    data = np.loadtxt(out_file, delimiter=",", skiprows=1)
    vac = OperatorBacked(make_state(FockSpace(1, 40), "vacuum"))
    want = translate(vac, z0).evaluate(data[:, :2])
    assert np.abs(data[:, 2] + 1j * data[:, 3] - want).max() <= 1e-8

    assert run(capsys, "charfn-grid", tmp_path / "missing.json")[0] == 2
    code, _, err = run(capsys, "charfn-grid", vacuum_spec, "--count", 1000, "--max-grid-points", 1000)
    assert code == 2 and "cap" in err


def test_clt_run(tmp_path, capsys, vacuum_spec, photon_spec):
    code, out, _ = run(capsys, "clt-run", vacuum_spec)
    rep = json.loads(out)
    assert code == 0 and all(e["sup_error"] <= 1e-10 for e in rep["errors"])
    assert rep["seed"] == 0 and rep["config"]["cutoff"] == 16
    code, out, _ = run(capsys, "clt-run", photon_spec, "--n", "25,100,400")
    rep = json.loads(out)
    assert code == 0 and rep["strictly_decreasing"] and rep["errors"][-1]["sup_error"] < 0.05
    code, out, err = run(capsys, "clt-run", vacuum_spec, "--norming", "power:1")
    rep = json.loads(out)
    assert code == 1 and "warning" in err and rep["degenerate_limit"] and rep["bound_violation_count"] == 3


def test_clt_run_norming_file_and_csv(tmp_path, capsys, photon_spec):
    norm = write(tmp_path / "norm.json", {"entries": {str(n): [1 / math.sqrt(n)] for n in (25, 100, 400)}})
    dumps = tmp_path / "dumps"
    code, out, _ = run(capsys, "clt-run", photon_spec, "--norming", norm, "--csv-dir", dumps)
    assert code == 0
    assert sorted(p.name for p in dumps.iterdir()) == ["sn_100.csv", "sn_25.csv", "sn_400.csv"]


def test_clt_run_deterministic(tmp_path, capsys, photon_spec):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "clt-run", photon_spec, "--seed", 17, "--out", a)[0] == 0
    assert run(capsys, "clt-run", photon_spec, "--seed", 17, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_precedence(tmp_path, capsys, monkeypatch, photon_spec):
    cfg = write(tmp_path / "cfg.json", {"seed": 5, "clt-run": {"n": "10,40", "threshold": 0.2}})
    _, out, _ = run(capsys, "clt-run", photon_spec, "--config", cfg)
    rep = json.loads(out)
    assert rep["seed"] == 5 and rep["config"]["n"] == [10, 40] and rep["threshold"] == 0.2
    monkeypatch.setenv("WEYLCLT_SEED", "9")
    monkeypatch.setenv("WEYLCLT_THRESHOLD", "0.3")
    _, out, _ = run(capsys, "clt-run", photon_spec, "--config", cfg, "--seed", 11)
    rep = json.loads(out)
    assert rep["seed"] == 11 and rep["threshold"] == 0.3 and rep["config"]["n"] == [10, 40]
    monkeypatch.setenv("WEYLCLT_SEED", "nine")
    assert run(capsys, "clt-run", photon_spec)[0] == 2


def test_lemma_l(tmp_path, capsys):
    code, out, err = run(capsys, "lemma-l", "--family", "rademacher", "--n", "1,10,100")
    assert code == 0 and "stabilized" in err
    assert [line.split(",")[1] for line in out.splitlines()[1:]] == ["1.0", "1.0", "1.0"]
    spec = write(tmp_path / "u.json", {"family": "uniform"})
    out_file = tmp_path / "l.csv"
    code, out, _ = run(capsys, "lemma-l", "--measure", spec, "--n", "1,100,10000", "--out", out_file)
    assert code == 0 and out.strip() == "# stabilized"
    assert float(out_file.read_text().splitlines()[-1].split(",")[1]) == pytest.approx(1 / 3)
    code, _, err = run(capsys, "lemma-l", "--family", "pareto", "--param", "alpha=1.5", "--n", "100,10000,1000000")
    assert code == 1 and "diverging" in err
    assert run(capsys, "lemma-l", "--family", "pareto", "--param", "alpha=-2")[0] == 2
    assert run(capsys, "lemma-l", "--family", "rademacher", "--b-rule", "exp")[0] == 2


def test_admissible(capsys):
    code, out, _ = run(capsys, "admissible", "--norming", "sqrt", "--n-max", 100000)
    assert code == 0 and json.loads(out)["violation_count"] == 0
    code, out, _ = run(capsys, "admissible", "--norming", "power:1", "--n-max", 50, "--d", 2)
    rep = json.loads(out)
    assert code == 1 and rep["violation_count"] == 2 * 49


def test_usage_errors(capsys):
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "bochner")[0] == 2


def test_explicit_matrix_roundtrip():
    T = make_state(FockSpace(1, 3), "ginibre", seed=4)
    spec = {"d": 1, "cutoff": 3, "state": {"kind": "explicit", "matrix": matrix_to_json(T.matrix)}}
    assert np.array_equal(state_from_spec(spec).matrix, T.matrix)
