import json
import subprocess
import sys

import pytest

from chowla_lab.cli import main

CONFIG = """
[global]
max_n = 200000

[[experiment]]
name = "two-point"
kind = "correlate"
functions = ["liouville", "liouville"]
shifts = [0, 1]
scales = [1000, 100000]
"""


def test_run_and_validate(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(CONFIG)
    assert main(["validate", str(cfg)]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["experiments"][0]["status"] == "ok"
    assert (tmp_path / "out" / "two-point.csv").exists()


def test_diagnostics_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(CONFIG.replace('"liouville", "liouville"', '"liouville", "char(q=4,index=5)"'))
    assert main(["validate", str(cfg)]) == 1
    assert "index 5" in capsys.readouterr().err
    cfg.write_text("[global\n")
    assert main(["run", str(cfg)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_runtime_failure_exit_2(tmp_path, capsys):
    assert main(["straighten", "dirichlet", "--q", "7", "--noise", "0.5"]) == 2
    assert "EpsilonTooLarge" in capsys.readouterr().err


@pytest.mark.parametrize("argv, needle", [
    (["correlate", "--f", "liouville", "--f", "liouville", "--shifts", "0,1", "--scales", "10"], "-0.4"),
    (["race", "--scales", "1,10"], "0.7"),
    (["patterns", "--k", "1", "--max", "10"], "+"),
    (["straighten", "dirichlet", "--q", "12", "--trials", "5"], "all_recovered"),
    (["straighten", "archimedean", "--t0", "2.5", "--noise", "0.02"], "max_abs_error"),
    (["pretense", "--g", "one", "--scales", "100,1000,10000"], "trending-inf"),
    (["pretense", "fit", "--g", "twist(char(q=4,index=1), t=1.0)", "--qmax", "4", "--tmax", "2",
      "--scale", "10000"], "char(q=4,index=1)"),
    (["smooth", "--alpha", "1/2", "--beta", "1/2", "--scales", "1000"], "0.0941"),
    (["compare-avgs", "--f", "one", "--max", "1000"], "gap"),
    (["three-point", "--shifts", "0,1,2", "--windows", "10000:10"], "0.6666"),
    (["isotopy-arch", "--f", "archimedean(t=1.5)", "--shifts", "0", "--q", "2", "--t", "1.5",
      "--scales", "1000"], "residual"),
    (["isotopy-nonarch", "--f", "liouville", "--f", "liouville", "--shifts", "0,1", "--char",
      "char(q=3,index=1)", "--scales", "1000"], "residual"),
    (["fd-table", "--f", "one", "--shifts", "0", "--divisors", "1,2", "--max", "1000"], "best_t"),
    (["equidist", "--f", "one", "--shifts", "0", "--cutoffs", "100", "--r0", "0.25"], "cutoff"),
    (["sweep", "--max", "100000"], "sum_liouville"),
])
def test_direct_subcommands(argv, needle, capsys):
    assert main(argv) == 0
    assert needle in capsys.readouterr().out


def test_out_writes_manifest(tmp_path, capsys):
    assert main(["race", "--scales", "10,100", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "race.csv").exists()


def test_console_script_threads_env(tmp_path):
    env_out = []
    for threads in ("1", "3"):
        r = subprocess.run([sys.executable, "-m", "chowla_lab.cli", "correlate", "--f", "liouville",
                            "--f", "liouville", "--shifts", "0,1", "--max", "1e5"],
                           capture_output=True, text=True, env={"CHOWLA_LAB_THREADS": threads, "PATH": ""})
        assert r.returncode == 0, r.stderr
        env_out.append(r.stdout)
    assert env_out[0] == env_out[1]
