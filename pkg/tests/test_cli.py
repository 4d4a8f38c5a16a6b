import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmpyramids import ExtendedFiniteMmSpace, mm_isomorphic
from mmpyramids import harness
from mmpyramids.cli import main
from mmpyramids.spacefile import SpaceParseError, dumps, load, loads, parse_expression


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# space documents

def test_explicit_document(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"labels": ["a", "b"], "dist": [[0, 2], [2, 0]], "weights": [0.25, 0.75]}))
    X = load(str(p))
    assert list(X.labels) == ["a", "b"] and X.dist[0, 1] == 2
    Z = loads('{"dist": [[0, "inf"], ["inf", 0]], "weights": [0.5, 0.5]}')
    assert isinstance(Z, ExtendedFiniteMmSpace) and Z.dist[0, 1] == np.inf


EXPRESSIONS = [
    "one_point()",
    "cycle(6)",
    "cycle(4, 2*pi)",
    "two_point(1.5, 0.3)",
    "dissipation(5)",
    "lp_power(two_point(1), 2, 3)",
    "lp_product(cycle(3), two_point(1), inf)",
    "direct_sum([(cycle(3), 0.4), (two_point(2), 0.6)])",
    "gapped_sum([(cycle(6), 0, 0.5), (dissipation(3), 0, 0.5)], 4)",
    "wedge(cycle(6), 0, cycle(6), 3, 0.5)",
    "scale(cycle(5), 3)",
    "restrict(dissipation(4), [0, 2])",
    "atoms([0.5, 0.25], 6)",
    "space([[0, 1], [1, 0]], [0.5, 0.5])",
]


@pytest.mark.parametrize("expr", EXPRESSIONS)
def test_expression_round_trip(expr):
    X = parse_expression(expr)
    Y = loads(dumps(X))
    assert type(Y) is type(X)
    assert mm_isomorphic(X, Y).holds
    assert mm_isomorphic(loads(json.dumps({"expr": expr})), X).holds


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_space_round_trip(s):
    X = harness.random_space(np.random.default_rng(s), n_max=7, n_min=1)
    Y = loads(dumps(X))
    assert np.array_equal(X.dist, Y.dist) and np.array_equal(X.weight, Y.weight)


@pytest.mark.parametrize("text,line,col", [
    ("cycle(", 1, 6),
    ("bogus(3)", 1, 1),
    ("scale(cycle(4), -1)", 1, 1),
    ("lp_product(cycle(3), 2)", 1, 22),
    ("cycle(3) + 1", 1, 1),
    ("__import__('os')", 1, 1),
    ("{\n \"dist\": [[0, 1],\n [1, 0]\n", 4, 1),
    ("{\"dist\": [[0, 1], [1 0]]}", 1, 22),
])
def test_parse_errors_have_positions(text, line, col):
    with pytest.raises(SpaceParseError) as e:
        loads(text)
    assert (e.value.line, e.value.column) == (line, col)


def test_expression_size_limit():
    big = "scale(" * 120 + "cycle(3)" + ", 1)" * 120
    with pytest.raises(SpaceParseError, match="nodes"):
        parse_expression(big)


# compute

@pytest.mark.parametrize("argv,expected", [
    (["compute", "sep", "dissipation(8)", "--kappas", "0.25", "0.25"], "8 EXACT"),
    (["compute", "box", "two_point(1,0.5)", "two_point(1,0.5)"], "0 EXACT"),
    (["compute", "cov", "dissipation(8)", "--r", "0.5", "--kappa", "0.25"], "6 EXACT"),
    (["compute", "obsdiam", "two_point(2)", "--kappa", "0.3"], "2 EXACT"),
    (["compute", "partial-diameter", "two_point(2)", "--kappa", "0.6"], "0 EXACT"),
    (["compute", "diameter", "cycle(4, 4)"], "2 EXACT"),
    (["compute", "prokhorov", "two_point(0.4)", "--mu", "1", "0", "--nu", "0", "1"], "0.4 EXACT"),
    (["compute", "tv", "two_point(1)", "--mu", "0.7", "0.3", "--nu", "0.5", "0.5"], "0.2 EXACT"),
    (["compute", "dominates", "two_point(1)", "two_point(2)"], "no EXACT"),
    (["compute", "isomorphic", "cycle(5)", "scale(cycle(5), 1)"], "yes EXACT"),
    (["compute", "net", "dissipation(4)", "--eps", "0.25"], "size 3 EXACT"),
    (["compute", "atoms-limit", "atoms([0.5,0.25],8)", "atoms([0.5,0.25],16)"], "(0.5, 0.25) ESTIMATE"),
    (["compute", "rho", "two_point(1)", "one_point()"], "upper 0.5 UPPER"),
])
def test_compute(capsys, argv, expected):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert out.splitlines()[0].startswith(expected)


def test_compute_outputs_are_flagged(capsys):
    code, out, _ = run(capsys, "compute", "decompose",
                       "direct_sum([(cycle(3), 0.7), (two_point(1), 0.3)])")
    assert code == 0
    for line in out.splitlines():
        assert any(flag in line for flag in ("EXACT", "LOWER", "UPPER", "ESTIMATE"))
    assert "weight 0.7 EXACT points 3" in out


def test_compute_errors(capsys):
    code, _, err = run(capsys, "compute", "box", "cycle(5)", "cycle(5)")
    assert code == 2 and "--max-pairs" in err
    code, _, err = run(capsys, "compute", "box", "cycle(", "cycle(3)")
    assert code == 2 and ":1:6:" in err
    code, _, err = run(capsys, "compute", "sep", "cycle(3)")
    assert code == 2 and "kappas" in err
    code, _, err = run(capsys, "compute", "dominates", "dissipation(10)", "one_point()")
    assert code == 2 and "--max-points" in err
    code, out, _ = run(capsys, "compute", "dominates", "dissipation(10)", "one_point()", "--max-points", "10")
    assert code == 0 and out.startswith("yes")


def test_compute_reads_files(capsys, tmp_path):
    p = tmp_path / "d8.txt"
    p.write_text("dissipation(8)\n")
    code, out, _ = run(capsys, "compute", "sep", str(p), "--kappas", "0.25", "0.25")
    assert code == 0 and out.strip() == "8 EXACT"


# check and experiments

def test_check_writes_csv(capsys, tmp_path):
    out = tmp_path / "m.csv"
    code, text, _ = run(capsys, "check", "metric-lemmas", "--seed", "7", "--count", "5", "--out", str(out))
    assert code == 0 and "PASS" in text
    assert out.read_text().splitlines()[0] == "check,seed,instance-id,lhs,rhs,slack,runtime-ms"
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert rows and all(r["seed"] == "7" for r in rows)


def test_check_all_order(capsys, tmp_path):
    code, text, _ = run(capsys, "check", "all", "--count", "2", "--out", str(tmp_path / "a.csv"))
    assert code == 0
    order = [line.split(":")[0] for line in text.splitlines() if not line.startswith(" ")]
    assert order == list(harness.SUITES)


def test_check_unknown_suite(capsys):
    code, _, err = run(capsys, "check", "nope")
    assert code == 2 and "metric-lemmas" in err


def test_seed_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MMPYR_SEED", "11")
    out = tmp_path / "s.csv"
    run(capsys, "check", "sum-bounds", "--count", "1", "--out", str(out))
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert rows[0]["seed"] == "11"


def test_injected_bug_fails_with_replay_file(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "prokhorov_flow", lambda mu, nu: 5.0)
    out = tmp_path / "bug.csv"
    code, text, _ = run(capsys, "check", "metric-lemmas", "--count", "3", "--out", str(out))
    assert code == 1
    replay_file = tmp_path / "bug.csv.failures.json"
    failures = json.loads(replay_file.read_text())
    assert failures and failures[0]["suite"] == "metric-lemmas"
    code, text, _ = run(capsys, "replay", str(replay_file))
    assert code == 1 and "FAIL" in text
    monkeypatch.undo()
    code, text, _ = run(capsys, "replay", str(replay_file))
    assert code == 0 and "FAIL" not in text


@pytest.mark.parametrize("argv,needle", [
    (["experiment", "wedge", "--m", "6", "--n", "1", "2", "--alpha", "0.5", "--rho-budget", "0"], "wedge: PASS"),
    (["experiment", "ball-decay", "--p", "2", "--r", "0.4"], "ball-decay: PASS"),
    (["experiment", "decomposition", "--seed", "3", "--count", "4"], "recovered ("),
    (["experiment", "dissipation"], "dissipation: PASS"),
])
def test_experiments(capsys, tmp_path, argv, needle):
    out = tmp_path / "e.csv"
    code, text, _ = run(capsys, *argv, "--out", str(out))
    assert code == 0 and needle in text
    assert out.read_text().startswith("check,seed,instance-id")


def test_ball_decay_rows(capsys, tmp_path):
    out = tmp_path / "b.csv"
    run(capsys, "experiment", "ball-decay", "--out", str(out))
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    masses = {r["instance-id"]: float(r["lhs"]) for r in rows if r["check"] == "mass<=mass(n0)^floor(n/n0)"}
    assert list(masses.values()) == [0.5, 0.25, 0.0625]


def test_validate(capsys, tmp_path):
    good = tmp_path / "g.json"
    good.write_text('{"expr": "cycle(4)"}')
    bad = tmp_path / "b.json"
    bad.write_text('{"dist": [[0, 1], [2, 0]]}')
    code, out, _ = run(capsys, "validate", str(good), "--emit")
    assert code == 0 and "4 points" in out and '"dist"' in out
    code, out, _ = run(capsys, "validate", str(good), str(bad))
    assert code == 2 and "error" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "mmpyramids", "compute", "sep", "dissipation(8)",
                        "--kappas", "0.25", "0.25"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "8 EXACT"
