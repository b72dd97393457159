import json

import pytest

from navier_blowup import asymptotics
from navier_blowup.cli import run


def test_constants_json(capsys):
    assert run(["constants", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    for key in ("c0", "S", "c1", "c2", "omega5", "c_fund"):
        assert {"value", "error_estimate"} <= set(data[key])


def test_constants_csv_deterministic(capsys):
    run(["constants"])
    first = capsys.readouterr().out
    run(["constants"])
    assert capsys.readouterr().out == first
    assert first.splitlines()[0] == "name,value,error_estimate"


def test_seventeen_digits(capsys):
    run(["constants", "--json"])
    data = json.loads(capsys.readouterr().out)
    c1 = data["c1"]["value"]
    assert float(repr(c1)) == c1
    assert "505.49521951791883" in json.dumps(c1) or float(format(c1, ".17g")) == c1


def test_solve_out_of_range(capsys):
    assert run(["solve", "--eps", "2.0"]) == 2
    err = capsys.readouterr().err
    assert "(0, 1)" in err
    assert "usage" in err


def test_unknown_flag(capsys):
    assert run(["solve", "--eps", "0.2", "--colour", "red"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_command(capsys):
    assert run(["plot"]) == 2


def test_missing_command(capsys):
    assert run([]) == 2


def test_negative_radius(capsys):
    assert run(["robin", "--radius", "-1"]) == 2


def test_robin_csv(tmp_path):
    out = tmp_path / "phi.csv"
    assert run(["robin", "--points", "4", "--radius", "2", "--out", str(out)]) == 0
    lines = out.read_bytes().decode().split("\n")
    assert lines[0] == "r,phi,dphi_dr,error_estimate"
    assert len([ln for ln in lines if ln]) == 5
    assert float(lines[1].split(",")[1]) == pytest.approx(0.6, rel=1e-10)


def test_project_check(tmp_path, capsys):
    out = tmp_path / "proj.csv"
    assert run(["project-check", "--lambda", "50", "--radius", "1", "--out", str(out)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["closed_vs_numeric"] <= 1e-6
    assert data["theta_min"] >= 0
    assert out.read_text().startswith("r,delta,Pdelta,theta,leading,f\n")


def test_solve_and_warm_start(tmp_path, capsys):
    prefix = tmp_path / "s04"
    assert run(["solve", "--eps", "0.4", "--out", str(prefix)]) == 0
    first = json.loads((tmp_path / "s04.json").read_text())
    assert (tmp_path / "s04.csv").read_text().startswith("r,u,lap_u\n")
    assert run(["solve", "--eps", "0.2", "--warm", str(tmp_path / "s04.json")]) == 0
    second = json.loads(capsys.readouterr().out)
    assert second["sup_norm"] > first["sup_norm"]


def test_solve_bad_warm_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run(["solve", "--eps", "0.3", "--warm", str(bad)]) == 2


def test_solve_byte_identical(capsys):
    run(["solve", "--eps", "0.3"])
    a = capsys.readouterr().out
    run(["solve", "--eps", "0.3"])
    assert capsys.readouterr().out == a


def test_sweep_and_reduce(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    summary = tmp_path / "summary.json"
    args = ["sweep", "--eps", "0.4,0.2,0.1,0.05", "--radius", "1", "--out", str(csv_path), "--summary", str(summary)]
    assert run(args) == 0
    raw = csv_path.read_bytes()
    assert b"\r" not in raw
    rows = asymptotics.read_sweep_csv(raw.decode())
    assert [r.epsilon for r in rows] == [0.4, 0.2, 0.1, 0.05]
    assert "limits" in json.loads(summary.read_text())
    assert run(["reduce", "--eps", "0.05", "--compare", str(csv_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["relative_gap"] < 0.1
    assert run(["reduce", "--eps", "0.025", "--compare", str(csv_path)]) == 2


def test_sweep_bad_list():
    assert run(["sweep", "--eps", "0.1,0.2"]) == 2
    assert run(["sweep", "--eps", "a,b"]) == 2


def test_reduce_out_of_range():
    assert run(["reduce", "--eps", "0.5"]) == 2
