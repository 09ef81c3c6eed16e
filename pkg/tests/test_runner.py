import json
from pathlib import Path

import pytest

from chowla_lab.config import ConfigParseError, from_dict, parse_config, validate
from chowla_lab.errors import ConfigError
from chowla_lab.io import read_csv
from chowla_lab.runner import run

ALL_KINDS = """
[global]
max_n = 200000
seed = 5

[[experiment]]
name = "two-point"
kind = "correlate"
functions = ["liouville", "liouville"]
shifts = [0, 1]
grid = {lo = 100, hi = 100000, ratio = 10}

[[experiment]]
name = "fd"
kind = "fd_table"
functions = ["archimedean(t=1.5)"]
shifts = [0]
divisors = [1, 2, 4, 8]
X = 100000

[[experiment]]
name = "iso-a"
kind = "isotopy_arch"
functions = ["archimedean(t=1.5)"]
shifts = [0]
q = 2
t = 1.5
scales = [1000, 10000, 100000]

[[experiment]]
name = "iso-n"
kind = "isotopy_nonarch"
functions = ["liouville", "liouville"]
shifts = [0, 1]
character = "char(q=3,index=1)"
scales = [1000, 100000]

[[experiment]]
name = "eq"
kind = "equidist"
functions = ["archimedean(t=2)"]
shifts = [0]
cutoffs = [1000, 100000]
r0 = 0.2
r1 = 2.0

[[experiment]]
name = "pr"
kind = "pretense"
f = "liouville"
g = "one"
scales = [100, 1000, 10000, 100000]

[[experiment]]
name = "fit"
kind = "fit"
g = "twist(char(q=4,index=1), t=1.0)"
q_max = 4
t_max = 2
X = 100000

[[experiment]]
name = "race"
kind = "race"
scales = [10, 1000, 100000]

[[experiment]]
name = "smooth"
kind = "smooth"
alpha = "1/2"
beta = "1/3"
scales = [100000]
fixed_scale = true

[[experiment]]
name = "pat"
kind = "patterns"
K = 3
N = 100000
growth = [1, 2, 3, 4]

[[experiment]]
name = "st-d"
kind = "straighten"
mode = "dirichlet"
trials = 20

[[experiment]]
name = "st-a"
kind = "straighten"
mode = "archimedean"
trials = 2
noise = 0.03

[[experiment]]
name = "cmp"
kind = "compare_avgs"
function = "archimedean(t=1)"
X = 10000

[[experiment]]
name = "tp"
kind = "three_point"
function = "lambda_q(3)"
shifts = [0, 1, 2]
windows = [[100000, 100]]
"""


def test_every_kind_runs_in_one_sweep(tmp_path):
    cfg = parse_config(ALL_KINDS)
    assert validate(cfg) == []
    man = run(cfg, tmp_path)
    assert man.ok, [(e.name, e.error) for e in man.experiments]
    assert man.sweep.sweeps == 1
    data = json.loads(Path(man.path).read_text())
    assert data["config_hash"] == cfg.hash() and data["seed"] == 5
    assert data["sieve"]["throughput_per_s"] > 0
    assert len(data["experiments"]) == 14
    for e in data["experiments"]:
        assert e["status"] == "ok" and all(Path(p).exists() for p in e["outputs"])
    header, rows = read_csv(tmp_path / "two-point.csv")
    assert header == ["scale", "re", "im", "abs"] and len(rows) == 4
    header, _ = read_csv(tmp_path / "two-point-averages.csv")
    assert header == ["scale", "scheme", "re", "im", "abs", "count", "den"]
    header, rows = read_csv(tmp_path / "pat.csv")
    assert header == ["pattern", "count", "density_unweighted", "density_log"] and len(rows) == 8


def test_empty_config(tmp_path):
    man = run(from_dict({}), tmp_path)
    assert man.experiments == [] and json.loads(Path(man.path).read_text())["experiments"] == []


def _csvs(root):
    return {p.name: p.read_text() for p in sorted(Path(root).glob("*.csv"))}


def test_determinism_across_reruns_and_threads(tmp_path):
    text = ALL_KINDS.replace("seed = 5", "seed = 5\nsegment_size = 16384")
    a = run(parse_config(text), tmp_path / "a")
    b = run(parse_config(text), tmp_path / "b")
    c = run(parse_config(text.replace("seed = 5", "seed = 5\nthreads = 4")), tmp_path / "c")
    assert a.ok and b.ok and c.ok
    assert _csvs(tmp_path / "a") == _csvs(tmp_path / "b") == _csvs(tmp_path / "c")


def test_fault_isolation(tmp_path):
    cfg = from_dict({"global": {"max_n": 10**6}, "experiment": [
        {"name": "ok", "kind": "correlate", "functions": ["liouville"], "shifts": [0], "scales": [1000]},
        {"name": "too-big", "kind": "fit", "g": "liouville", "q_max": 500, "t_max": 1000, "X": 10**6},
        {"name": "noisy", "kind": "straighten", "mode": "dirichlet", "noise": 0.5},
        {"name": "also-ok", "kind": "race", "scales": [10]},
    ]})
    man = run(cfg, tmp_path)
    status = {e.name: e.status for e in man.experiments}
    assert status == {"ok": "ok", "too-big": "failed", "noisy": "failed", "also-ok": "ok"}
    errors = {e.name: e.error for e in man.experiments}
    assert "CapabilityError" in errors["too-big"] and "EpsilonTooLarge" in errors["noisy"]


def test_validate_reports_everything():
    cfg = from_dict({"global": {"max_n": 1000}, "experiment": [
        {"name": "a", "kind": "correlate", "functions": ["liouville"], "shifts": [0], "scales": [10]},
        {"name": "a", "kind": "correlate", "functions": ["char(q=4,index=5)"], "shifts": [0], "scales": [10]},
        {"name": "b", "kind": "correlate", "functions": ["liouville", "liouville"], "shifts": [0, 600],
         "scales": [10]},
        {"name": "c", "kind": "nonsense"},
        {"name": "d", "kind": "race", "scales": [10], "colour": "blue"},
        {"name": "e", "kind": "race", "scales": [5000]},
    ]})
    diags = validate(cfg)
    text = [str(d) for d in diags]
    assert sum("duplicate" in t for t in text) == 1
    assert any("index 5 out of range" in t for t in text)
    assert any(d.experiment == "b" and d.field == "shifts" and "max_n/2" in d.message for d in diags)
    assert any(d.experiment == "c" and d.field == "kind" for d in diags)
    assert any(d.experiment == "d" and "colour" in d.message for d in diags)
    assert any(d.experiment == "e" and "max_n" in d.message for d in diags)
    with pytest.raises(ConfigError):
        run(cfg)


def test_parse_errors_have_positions():
    with pytest.raises(ConfigParseError) as e:
        parse_config("[global]\nmax_n = = 3\n")
    assert e.value.line == 2 and e.value.column is not None
    with pytest.raises(ConfigParseError):
        parse_config("[globl]\n")
    with pytest.raises(ConfigParseError):
        parse_config("[global]\nmaxn = 3\n")


def test_artifact_formats(tmp_path):
    import math

    from chowla_lab.io import Document, Table

    t = Table("t", ["a", "b", "c"], [(1, 0.1, True), (2, 1 / 3, False)])
    assert t.text() == "a,b,c\n1,0.1,1\n2,0.3333333333333333,0\n"
    d = Document("d", {"z": 1 + 2j, "inf": math.inf, "xs": (1, 2)})
    assert json.loads(d.write(tmp_path).read_text()) == {"z": {"re": 1.0, "im": 2.0}, "inf": "inf", "xs": [1, 2]}
