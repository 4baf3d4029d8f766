import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from cdqvi import kkt_residual, load_instance
from cdqvi.cli import CSV_COLUMNS, main


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_exit(args, capsys):
    with pytest.raises(SystemExit) as exc:
        main([str(a) for a in args])
    capsys.readouterr()
    return exc.value.code


@pytest.fixture
def tiny_file(tmp_path, capsys):
    path = tmp_path / "tiny.json"
    assert run(["gen", "--nodes", 1, "--phi", 1, "--l", 10, "-o", path], capsys)[0] == 0
    return path


@pytest.fixture
def r15_file(tmp_path, capsys):
    path = tmp_path / "cpcf31-like.json"
    args = ["gen", "--nodes", 15, "--phi", 10, "--l", 1000, "--kt", 1, "--kn", 1,
            "--coupling", 0.3, "-o", path]
    assert run(args, capsys)[0] == 0
    return path


def test_gen_dimensions(r15_file):
    data = json.loads(r15_file.read_text())
    assert (data["N"], data["m"]) == (30, 60)


def test_gen_tiny(tiny_file):
    inst = load_instance(tiny_file)
    np.testing.assert_array_equal(inst.D, np.eye(2))
    np.testing.assert_array_equal(inst.e, [0.0, -1.0])
    assert inst.phi == 1.0 and inst.l == 10.0


def test_gen_seeded_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(["gen", "--nodes", 2, "--seed", 7, "-o", p], capsys)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("args", [
    ["gen", "--nodes", 1],                          # missing -o
    ["gen", "--nodes", 0, "-o", "x.json"],
    ["gen", "--nodes", 1, "--phi", "-1", "-o", "x.json"],
    ["solve"],
    ["frobnicate"],
])
def test_usage_errors(args, capsys):
    assert usage_exit(args, capsys) == 2


def test_gen_io_error(tmp_path, capsys):
    code, _, err = run(["gen", "--nodes", 1, "-o", tmp_path / "missing" / "x.json"], capsys)
    assert code == 3 and err


def test_solve_tiny(tiny_file, capsys):
    code, out, _ = run(["solve", tiny_file], capsys)
    assert code == 0
    assert "solved" in out


def test_solve_json_fields(tiny_file, capsys):
    code, out, _ = run(["solve", tiny_file, "--format", "json"], capsys)
    (rep,) = json.loads(out)["reports"]
    for key in CSV_COLUMNS + ("inner_fallback", "inner_crash", "eps_history", "delta_history", "solution"):
        assert key in rep
    assert rep["status"] == "solved" and rep["residual_inf"] <= 1e-4
    assert rep["time_s"] is None


def test_reported_residual_recomputes(r15_file, capsys):
    code, out, _ = run(["solve", r15_file, "--format", "json"], capsys)
    (rep,) = json.loads(out)["reports"]
    inst = load_instance(r15_file)
    Y = kkt_residual(inst, rep["solution"]["tau"], rep["solution"]["lam"])
    assert abs(np.max(np.abs(Y)) - rep["residual_inf"]) <= 1e-12


def test_solve_failure_exit(r15_file, capsys):
    code, out, _ = run(["solve", r15_file, "--tol", "1e-12", "--max-outer", 1, "--format", "csv"], capsys)
    assert code == 1
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["status"] == "failure"


def test_solve_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"N": 2}')
    assert run(["solve", bad], capsys)[0] == 3
    assert run(["solve", tmp_path / "nope.json"], capsys)[0] == 3


def test_solve_csv_columns(tiny_file, capsys):
    _, out, _ = run(["solve", tiny_file, "--format", "csv"], capsys)
    header, row = out.strip().splitlines()
    assert tuple(header.split(",")) == CSV_COLUMNS
    assert row.split(",")[8] == ""


def test_timing_flag(tiny_file, capsys):
    _, out, _ = run(["solve", tiny_file, "--format", "csv", "--timing"], capsys)
    assert float(out.strip().splitlines()[1].split(",")[8]) >= 0


def test_sweep_default_grid(r15_file, capsys):
    code, out, err = run(["sweep", r15_file, "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["phi"]) for r in rows] == [1e-3, 1e-2, 1e-1, 1, 10, 1e2, 1e3, 1e4, 1e5]
    assert all(r["status"] == "solved" for r in rows[:7])
    assert {r["status"] for r in rows} <= {"solved", "failure"}
    assert code == (0 if all(r["status"] == "solved" for r in rows) else 1)
    assert err.startswith("# solved")


def test_sweep_single_phi_matches_solve(r15_file, capsys):
    _, swept, _ = run(["sweep", r15_file, "--phis", "10", "--format", "csv"], capsys)
    _, solved, _ = run(["solve", r15_file, "--format", "csv"], capsys)
    assert swept == solved


def test_sweep_from_spec_and_jobs(capsys, monkeypatch):
    _, a, _ = run(["sweep", "--nodes", 4, "--phis", "1e-3,1,1e3", "--format", "csv"], capsys)
    _, b, _ = run(["sweep", "--nodes", 4, "--phis", "1e-3,1,1e3", "--format", "csv", "--jobs", 3], capsys)
    monkeypatch.setenv("CDQVI_JOBS", "2")
    from cdqvi.cli import build_parser
    assert build_parser().parse_args(["sweep", "--nodes", "1"]).jobs == 2
    _, c, _ = run(["sweep", "--nodes", 4, "--phis", "1e-3,1,1e3", "--format", "csv"], capsys)
    assert a == b == c
    assert len(a.strip().splitlines()) == 4


def test_sweep_table_summary(capsys):
    code, out, _ = run(["sweep", "--nodes", 3, "--phis", "1e-3,1"], capsys)
    assert code == 0
    assert out.strip().splitlines()[-1] == "# solved 2/2, failed 0"


def test_sweep_needs_one_source(tiny_file, capsys):
    assert usage_exit(["sweep", tiny_file, "--nodes", 2], capsys) == 2
    assert usage_exit(["sweep"], capsys) == 2


def test_oracle_command(tiny_file, tmp_path, capsys):
    code, out, _ = run(["oracle", tiny_file, "--format", "json"], capsys)
    pts = json.loads(out)["points"]
    assert code == 0 and len(pts) >= 1
    assert all(p["residual"] <= 1e-10 for p in pts)
    r2 = tmp_path / "r2.json"
    run(["gen", "--nodes", 2, "--phi", 0.5, "--l", 3, "-o", r2], capsys)
    code, out, _ = run(["oracle", r2], capsys)
    assert code == 0 and out.startswith("# 1 KKT point")


def test_oracle_capability(r15_file, capsys):
    assert run(["oracle", r15_file], capsys)[0] == 4


def test_output_file_and_determinism(r15_file, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(["sweep", r15_file, "--phis", "1e-3,1e4", "--format", "json", "-o", p], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point(tiny_file):
    proc = subprocess.run([sys.executable, "-m", "cdqvi", "solve", str(tiny_file)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "solved" in proc.stdout
