import json
import subprocess
import sys

import numpy as np
import pytest

from segsample.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_circulant(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "circulant", "--d", "3", "--offsets", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["meta"]["tool"] == "segsample"
    X = np.array(doc["coordinates"])
    assert X.shape == (3, 3)
    assert sorted(map(tuple, np.round(X.T, 12))) == [(0.0, 0.5, 1.0), (0.5, 1.0, 0.0), (1.0, 0.0, 0.5)]
    assert doc["max_coordinate_residual"] < 1e-12


def test_validate_roundtrip(capsys, tmp_path):
    f = tmp_path / "seg.json"
    assert main(["solve", "circulant", "--d", "4", "--offsets", "1,2", "--out", str(f)]) == 0
    code, out, _ = run(capsys, "validate", "--segments", str(f))
    assert code == 0 and json.loads(out)["report"]["max_coordinate_residual"] < 1e-8


def test_validate_nonuniform(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"coordinates": [[0, 0.9], [1, 0.1]], "edges": [[1, 2]]}))
    code, _, _ = run(capsys, "validate", "--segments", str(f))
    assert code == 1
    f.write_text(json.dumps({"X": [[0, 1]]}))
    code, _, err = run(capsys, "validate", "--segments", str(f))
    assert code == 1 and "coordinates" in err


def test_solve_standard(capsys, tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"coordinates": [[0, 0.3, 0.7, 1.0], [0.4, 0.0, 1.0, 0.6]], "edges": [[1, 2], [3, 4]]}))
    code, out, _ = run(capsys, "solve", "standard", "--segments", str(f))
    assert code == 0 and json.loads(out)["max_coordinate_residual"] < 1e-6


def test_measure_json(capsys):
    code, out, _ = run(capsys, "measure", "--construction", "ccv", "--d", "3", "--offsets", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["report"]["tau"] == pytest.approx(-1 / 3, abs=1e-9)
    assert doc["report"]["rho"] == pytest.approx(-0.5, abs=1e-9)


def test_measure_empirical(capsys):
    code, out, _ = run(capsys, "measure", "--construction", "rbs", "--d", "3", "--method", "empirical", "--n", "20000")
    rep = json.loads(out)["report"]
    assert code == 0 and abs(rep["rho"] + 0.5) < 4 * rep["rho_se"]


def test_sample_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sample", "--construction", "aj-base-b", "--d", "4", "--b", "3", "--n", "50", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# segsample") and "seed=7" in lines[0]
    U = np.loadtxt(a, delimiter=",", skiprows=2)
    assert U.shape == (50, 4)


def test_usage_errors(capsys):
    assert main(["sample"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["measure", "--construction", "ccv"]) == 2


def test_data_errors(capsys, tmp_path):
    assert main(["validate", "--segments", str(tmp_path / "missing.json")]) == 1
    f = tmp_path / "p.csv"
    f.write_text("y,x1,x2\n")
    assert main(["mcmc", "--data", str(f), "--iterations", "20", "--burn-in", "5", "--reps", "2"]) == 1


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"construction": "ccv", "d": 4, "offsets": [1], "n": 5}))
    code, out, _ = run(capsys, "sample", "--config", str(cfg), "--n", "3")
    assert code == 0
    assert len(out.strip().splitlines()) == 2 + 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["sample", "--config", str(cfg)]) == 2


def test_timing_and_clt_csv(capsys):
    code, out, _ = run(capsys, "timing", "--constructions", "rbs", "--d-range", "5", "--n", "100", "--reps", "2")
    assert code == 0 and out.splitlines()[1] == "construction,d,mean_time"
    code, out, _ = run(capsys, "clt", "--d-list", "16", "--reps", "50", "--format", "json")
    assert code == 0 and len(json.loads(out)["rows"]) == 1


def test_console_entry():
    r = subprocess.run([sys.executable, "-m", "segsample", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "segsample" in r.stdout
