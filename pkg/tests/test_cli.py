import re
import subprocess
import sys

import numpy as np
import pytest

from tarma_lm.cli import EXIT_CONFIG, EXIT_DATA, EXIT_TABLE, main
from tarma_lm.series import TimeSeries, read_series_csv, write_series_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def field(text, name):
    return float(re.search(rf"^{name}\s+(\S+)", text, re.M).group(1))


def test_random_walk_fixture_not_rejected(capsys, data_dir):
    code, out, _ = run(capsys, "test", data_dir / "random_walk_n500.csv")
    assert code == 0 and field(out, "p-value") > 0.10
    assert "theta = 0 table" in out and "asymptotic-table" in out
    assert "sample percentile" in out


def test_eq28_fixture_rejected(capsys, data_dir):
    code, out, _ = run(capsys, "test", data_dir / "eq28_tau1.5_n500.csv")
    assert code == 0 and field(out, "p-value") < 0.01


def test_above_on_negated_series(capsys, data_dir, tmp_path):
    src = data_dir / "random_walk_n500.csv"
    neg = tmp_path / "neg.csv"
    write_series_csv(-read_series_csv(src), neg)
    _, a, _ = run(capsys, "test", src)
    _, b, _ = run(capsys, "test", neg, "--above")
    assert field(a, "supLM") == field(b, "supLM")


def test_bootstrap_and_curve(capsys, data_dir, tmp_path):
    curve = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "test", data_dir / "random_walk_n500.csv", "--bootstrap", 99,
                       "--seed", 3, "--curve-out", curve)
    assert code == 0 and "p-value (wild)" in out
    assert curve.read_text().startswith("r,T\n")


def test_simulate_is_deterministic(tmp_path):
    args = ["simulate", "--dgp", "EQ28", "--tau", "0", "--theta", "0", "--n", "300",
            "--seed", "1", "--out"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + [str(a)]) == 0 and main(args + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_null_table_thread_invariant(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["null-table", "--theta", "0", "--n", "100", "--pi", "0.25", "--reps", "1000",
            "--seed", "2"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--threads", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_fit_outputs(capsys, data_dir, tmp_path):
    fit, prof = tmp_path / "fit.csv", tmp_path / "prof.csv"
    code, out, _ = run(capsys, "fit", data_dir / "eq28_tau1.5_n500.csv", "--out", fit,
                       "--profile-out", prof)
    assert code == 0 and out.count("X_t =") == 2
    assert fit.read_text().startswith("param,estimate,se")
    assert prof.read_text().startswith("r,aic")


def test_diffusion_csv(capsys):
    code, out, _ = run(capsys, "diffusion", "--h", "0,3", "--steps", 1000, "--reps", 1000)
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "param,rate,se" and len(rows) == 3


def test_bench_small_plan(capsys, tmp_path):
    plan = tmp_path / "p.plan"
    plan.write_text("dgp = EQ28\nn = 100\nreps = 100\nseed = 1\n")
    code, out, _ = run(capsys, "bench", "--plan", plan)
    assert code == 0 and out.startswith("| DGP | n | sLM |")
    code, out, _ = run(capsys, "bench", "--plan", plan, "--format", "csv")
    assert out.startswith("dgp,n,test")


def test_exit_codes(capsys, data_dir, tmp_path):
    rw = data_dir / "random_walk_n500.csv"
    assert run(capsys, "test", tmp_path / "missing.csv")[0] == EXIT_CONFIG
    code, _, err = run(capsys, "test", rw, "--band", "0.7,0.3")
    assert code == EXIT_CONFIG and "0 < a < b < 1" in err
    assert run(capsys, "test", rw, "--nope")[0] == EXIT_CONFIG
    short = tmp_path / "short.csv"
    write_series_csv(TimeSeries(np.arange(10.0)), short)
    assert run(capsys, "test", short)[0] == EXIT_DATA
    small = tmp_path / "table.csv"
    small.write_text("# reps=1000\n# path_len=2000\n# seed=1\ntheta,n,pi,level,quantile\n"
                     "0,asym,0.25,0.9,12\n0,asym,0.25,0.95,14\n")
    assert run(capsys, "test", rw, "--band", "0.3,0.7", "--table", small)[0] == EXIT_TABLE
    bad = tmp_path / "bad.plan"
    bad.write_text("n = 300\n")
    assert run(capsys, "bench", "--plan", bad)[0] == EXIT_CONFIG


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "tarma_lm.cli", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "null-table" in out.stdout
