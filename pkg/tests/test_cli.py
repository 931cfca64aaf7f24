import json
import sys
from pathlib import Path

import numpy as np
import pytest

from fairclust.cli import main
from fairclust.data import load_csv, sample_indices, sample_points, standardize
from fairclust.errors import AllRowsSkippedError, MissingColumnError, SampleTooLargeError

SOLVER = Path(__file__).resolve().parents[1] / "scripts" / "highs_exchange_solver.py"


@pytest.fixture
def bank_csv(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "bank.csv"
    lines = ['"age";"job";"balance";"duration"']
    for i in range(40):
        lines.append(f'{rng.integers(20, 70)};"admin.";{rng.integers(-500, 5000)};{rng.integers(10, 900)}')
    lines.append('33;"admin.";;120')  # missing balance
    lines.append('41;"admin.";abc;120')  # non-numeric
    path.write_text("\n".join(lines) + "\n")
    return path


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


# -- data loading ------------------------------------------------------------


def test_load_csv_small(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b,c\n1,2,x\n3,4,y\n5,6,z\n")
    pts, skipped = load_csv(p, ["a", "b"])
    assert pts.shape == (3, 2) and skipped == 0
    pts, _ = load_csv(p, ["b", "a"])
    assert pts[0].tolist() == [2, 1]


def test_load_csv_malformed_row(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b\n1,2\n3,oops\n5,6\n")
    pts, skipped = load_csv(p, ["a", "b"])
    assert pts.shape == (2, 2) and skipped == 1


def test_load_bank_schema(bank_csv):
    pts, skipped = load_csv(bank_csv, ["age", "balance", "duration"])
    assert pts.shape == (40, 3) and skipped == 2


def test_load_errors(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b\nx,y\n")
    with pytest.raises(MissingColumnError):
        load_csv(p, ["c"])
    with pytest.raises(AllRowsSkippedError):
        load_csv(p, ["a"])
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv", ["a"])


def test_sampling():
    assert sample_indices(10, 10, 3).tolist() == list(range(10))
    assert sample_indices(100, 10, 3).tolist() == sample_indices(100, 10, 3).tolist()
    assert sample_indices(100, 10, 3).tolist() != sample_indices(100, 10, 4).tolist()
    with pytest.raises(SampleTooLargeError):
        sample_points(np.zeros((3, 1)), 4, 0)


def test_standardize():
    z = standardize([[1.0, 5.0], [3.0, 5.0]])
    assert z[:, 0].tolist() == [-1, 1] and z[:, 1].tolist() == [0, 0]


# -- subcommands --------------------------------------------------------------


def test_radii(capsys):
    rc, out, _ = run(capsys, "radii", "--synthetic", "20", "--k", "4")
    data = json.loads(out)
    assert rc == 0 and data["ball_size"] == 5 and len(data["radii"]) == 20


def test_solve_lp_and_round(capsys, tmp_path):
    rc, out, _ = run(capsys, "solve-lp", "--synthetic", "40", "--k", "3", "--p", "1", "--full")
    data = json.loads(out)
    assert rc == 0 and data["status"] == "OPTIMAL" and len(data["y"]) == 40
    dest = tmp_path / "r.json"
    rc, _, _ = run(capsys, "round", "--synthetic", "40", "--k", "3", "--beta", "search", "--out", str(dest))
    data = json.loads(dest.read_text())
    assert rc == 0 and data["n_centers"] <= 3 and data["max_violation"] <= 8 and data["beta"] <= 2


def test_sparse_round(capsys):
    rc, out, _ = run(capsys, "sparse-round", "--synthetic", "150", "--k", "5", "--delta", "0.3")
    data = json.loads(out)
    assert rc == 0 and data["max_violation"] <= 8 * 1.3 and data["reduced_n"] <= 150


def test_baselines(capsys, bank_csv):
    rc, out, _ = run(capsys, "baseline", "--input", str(bank_csv), "--features", "age,balance,duration", "--k", "4", "--standardize")
    assert rc == 0 and json.loads(out)["max_violation"] <= 2
    rc, out, _ = run(capsys, "baseline", "--synthetic", "30", "--k", "4", "--algorithm", "kmeanspp")
    assert rc == 0 and json.loads(out)["n_centers"] == 4


def test_oracle(capsys):
    rc, out, _ = run(capsys, "oracle", "--synthetic", "9", "--k", "2", "--p", "1")
    data = json.loads(out)
    assert rc == 0 and data["feasible"] and len(data["opt_centers"]) <= 2


def test_sweep_csv(capsys):
    rc, out, _ = run(capsys, "sweep", "--synthetic", "30", "--k", "3", "--dilation-grid", "1,2,inf", "--format", "csv")
    lines = out.strip().splitlines()
    assert rc == 0 and lines[0] == "dilation,lp_cost" and len(lines) == 4 and lines[-1].startswith("inf,")


def test_experiment_csv_deterministic(capsys, tmp_path):
    argv = ["experiment", "--synthetic", "150", "--sample", "60", "--trials", "2", "--k", "2,3",
            "--algorithms", "fair_round,sparse(0.3),plesnik,kmeanspp", "--format", "csv", "--no-timing"]
    rc1, a, _ = run(capsys, *argv)
    rc2, b, _ = run(capsys, *argv)
    assert rc1 == rc2 == 0 and a == b
    assert len(a.strip().splitlines()) == 1 + 2 * 2 * 4


def test_experiment_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"synthetic_n": 50, "k_list": [2], "algorithms": ["plesnik"], "trials": 1}))
    rc, out, _ = run(capsys, "experiment", "--config", str(cfg), "--trials", "2")
    data = json.loads(out)
    assert rc == 0 and len(data["rows"]) == 2 and "wall_time_ms" in data["rows"][0]


# -- exit codes -----------------------------------------------------------------


def test_exit_infeasible(capsys):
    rc, _, err = run(capsys, "round", "--synthetic", "30", "--k", "3", "--dilation", "0.01")
    assert rc == 2 and "Infeasible" in err
    rc, _, _ = run(capsys, "solve-lp", "--synthetic", "30", "--k", "3", "--dilation", "0.01")
    assert rc == 2
    rc, _, _ = run(capsys, "oracle", "--synthetic", "8", "--k", "2", "--dilation", "0.01")
    assert rc == 2


def test_exit_solver_failure(capsys, tmp_path):
    broken = tmp_path / "broken.py"
    broken.write_text("import sys\nsys.exit(5)\n")
    rc, _, _ = run(capsys, "solve-lp", "--synthetic", "20", "--k", "2", "--backend", f"external:{sys.executable} {broken}")
    assert rc == 3
    rc, _, _ = run(capsys, "solve-lp", "--synthetic", "20", "--k", "2", "--backend", "nosuch")
    assert rc == 3


def test_external_backend_ok(capsys):
    rc, out, _ = run(capsys, "solve-lp", "--synthetic", "20", "--k", "2", "--backend", f"external:{sys.executable} {SOLVER}")
    assert rc == 0 and json.loads(out)["residuals"]["cover"] <= 1e-6


def test_exit_io(capsys, tmp_path, bank_csv):
    rc, _, _ = run(capsys, "radii", "--input", str(tmp_path / "nope.csv"), "--features", "a", "--k", "2")
    assert rc == 4
    rc, _, _ = run(capsys, "radii", "--input", str(bank_csv), "--features", "age,salary", "--k", "2")
    assert rc == 4
    rc, _, _ = run(capsys, "radii", "--synthetic", "10", "--k", "2", "--out", str(tmp_path / "no" / "dir.json"))
    assert rc == 4


def test_exit_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["round", "--k"])
    assert exc.value.code == 1
    rc, _, _ = run(capsys, "radii", "--k", "2")  # no data source
    assert rc == 1
    rc, _, _ = run(capsys, "radii", "--synthetic", "5", "--k", "9")
    assert rc == 1
