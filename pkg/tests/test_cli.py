import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from algforge import __version__
from algforge.cli import main

MODELS = Path(__file__).resolve().parents[1] / "models"


def model(name):
    return str(MODELS / name)


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)


def test_version(runner):
    res = invoke(runner, "--version")
    assert res.exit_code == 0 and res.output.strip() == __version__


@pytest.mark.parametrize(
    "which,path,code",
    [
        ("lie", "so3.toml", 0),
        ("lie", "aff1.toml", 0),
        ("lie", "so3_perturbed.toml", 1),
        ("skew", "so3_perturbed.toml", 0),
        ("jacobi", "so3_perturbed.toml", 1),
        ("skew", "not_skew.toml", 1),
        ("al", "tangent_r2.toml", 0),
        ("leibniz", "tangent_r2.toml", 0),
    ],
)
def test_check_exit_codes(runner, which, path, code):
    res = invoke(runner, "check", "--which", which, model(path))
    assert res.exit_code == code, res.output


def test_check_json_report_carries_witness(runner):
    res = invoke(runner, "check", "--which", "lie", "--json", model("so3_perturbed.toml"))
    assert res.exit_code == 1
    rep = json.loads(res.output)
    assert rep["verdict"] == "fail"
    assert rep["witness"][0] == [0, 1, 2]
    assert "timing" in rep


def test_usage_and_schema_errors_exit_2(runner, tmp_path):
    assert invoke(runner, "check", "--which", "strong", model("so3.toml")).exit_code == 2
    assert invoke(runner, "check", "--which", "lie", tmp_path / "missing.toml").exit_code == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('[liealgebra]\ndim = 2\nc = []\ncolour = "red"\n')
    res = invoke(runner, "check", "--which", "lie", bad)
    assert res.exit_code == 2
    broken = tmp_path / "broken.toml"
    broken.write_text("[liealgebra\n")
    assert invoke(runner, "check", "--which", "lie", broken).exit_code == 2
    assert invoke(runner, "check", model("so3.toml")).exit_code == 2


def test_prolong_round_trip(runner, tmp_path):
    out = tmp_path / "so3_ha2.toml"
    res = invoke(runner, "prolong", "--out", out, model("so3.toml"))
    assert res.exit_code == 0
    for which in ("skew", "al", "lie", "strong"):
        res = invoke(runner, "check", "--which", which, out)
        assert res.exit_code == 0, (which, res.output)
    stdout = invoke(runner, "prolong", model("so3.toml")).output
    assert stdout == out.read_text()


def test_prolong_refuses_non_almost_lie(runner):
    res = invoke(runner, "prolong", model("not_skew.toml"))
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_lift_prints_vector_field(runner):
    res = invoke(runner, "lift", "--section", "x2,0", model("tangent_r2.toml"))
    assert res.exit_code == 0
    assert res.output.splitlines() == ["dx1 = x2", "dx2 = 0", "dv1 = v2", "dv2 = 0", "dz1 = z2", "dz2 = 0"]
    assert invoke(runner, "lift", "--section", "x2", model("tangent_r2.toml")).exit_code == 2


def test_equations_of_motion(runner):
    res = invoke(runner, "el", model("second_order_line.toml"))
    assert res.exit_code == 0 and res.output.strip() == "x.d4 = 0"
    res = invoke(runner, "el", model("reduced.toml"))
    assert res.exit_code == 0
    assert "y1.d1 - y2 = 0" in res.output
    res = invoke(runner, "ep", "--latex", model("so3.toml"))
    assert res.exit_code == 0
    assert res.output.startswith("\\begin{aligned}")
    assert invoke(runner, "ep", model("so3.toml")).output.count("= 0") == 3
    res = invoke(runner, "el", "--form", "prolong2", model("tangent_r2.toml"))
    assert res.exit_code == 0 and "= 0" in res.output


def test_integrate_writes_csv_and_reports_conservation(runner, tmp_path):
    out = tmp_path / "traj.csv"
    res = invoke(runner, "integrate", "--T", "0.5", "--h", "0.01", "--out", out, "--json", model("so3.toml"))
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output)
    assert rep["verdict"] == "pass"
    assert rep["conservation"]["symmetry"] < 1e-6
    assert rep["max_residual"] < 1e-6
    rows = list(csv.reader(out.open()))
    assert rows[0][0] == "t" and rows[0][-1] == "symmetry"
    assert len(rows) == 52


def test_integrate_needs_full_initial_data(runner, tmp_path):
    text = (MODELS / "so3.toml").read_text().replace('"a3.d2" = 0.5\n', "")
    partial = tmp_path / "partial.toml"
    partial.write_text(text)
    assert invoke(runner, "integrate", partial).exit_code == 2


def test_integrate_is_deterministic(runner, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    invoke(runner, "integrate", "--T", "0.2", "--out", a, model("abelian.toml"))
    invoke(runner, "integrate", "--T", "0.2", "--out", b, model("abelian.toml"))
    assert a.read_bytes() == b.read_bytes()


def test_leibniz_check_is_seeded(runner):
    env = {"ALGFORGE_SEED": "7"}
    r1 = invoke(runner, "check", "--which", "leibniz", "--json", model("tangent_r2.toml"), env=env)
    r2 = invoke(runner, "check", "--which", "leibniz", "--json", model("tangent_r2.toml"), env=env)
    d1, d2 = json.loads(r1.output), json.loads(r2.output)
    d1.pop("timing"), d2.pop("timing")
    assert d1 == d2 and d1["details"]["seed"] == 7


def test_kappa_eval(runner):
    res = invoke(runner, "kappa-eval", "--k", "1", "--ybar", "1,0,0", "--x", "0,1,0;0,0,0", model("so3.toml"))
    assert res.exit_code == 0 and res.output.strip() == "dY0 = (0, 0, 1)"
    res = invoke(runner, "kappa-eval", "--k", "2", "--ybar", "1,0,0", "--x", "0,1,0;0,0,0", model("so3.toml"))
    assert res.exit_code == 1
    res = invoke(runner, "kappa-eval", "--k", "1", "--ybar", "a,b", "--x", "0,1,0;0,0,0", model("so3.toml"))
    assert res.exit_code == 2


def test_subalg(runner):
    assert invoke(runner, "subalg", "--space", "0,0,1|0,0,1", model("so3.toml")).exit_code == 0
    res = invoke(runner, "subalg", "--json", "--space", "0,0,1|1,0,0;0,0,1", model("so3.toml"))
    assert res.exit_code == 1
    rep = json.loads(res.output)
    assert rep["restriction_agrees"] is True
