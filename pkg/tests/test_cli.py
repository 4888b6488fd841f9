import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from eigengeo.cli import main
from eigengeo.models import pt_metric_exact


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_scan_pt_metric(capsys):
    code, out, _ = run(["scan", "--model", "builtin:pt2x2", "--grid", "0:0:0.9:10",
                        "--quantities", "metric_fd"], capsys)
    assert code == 0
    table = rows(out)
    assert len(table) == 10
    for r in table:
        assert r["status"] == "OK"
        gamma = float(r["theta"])
        assert abs(float(r["G_fd_0_0"]) / pt_metric_exact(gamma) - 1) < 1e-5
    assert list(table[0])[:7] == ["theta", "status", "eig0_re", "eig0_im", "eig1_re", "eig1_im",
                                  "min_gap"]


def test_scan_crossing_ep(capsys):
    code, out, _ = run(["scan", "--model", "builtin:pt2x2", "--grid", "0:0.5:1.5:11",
                        "--quantities", "metric_pert,metric_fd"], capsys)
    assert code == 0
    table = rows(out)
    by_theta = {round(float(r["theta"]), 6): r for r in table}
    assert by_theta[1.0]["status"] == "DEGENERATE"
    assert by_theta[1.0]["G_fd_0_0"] == ""
    assert by_theta[0.5]["status"] == "OK"
    assert len(table) == 11


def test_scan_all_quantities(capsys, tmp_path):
    out_path = tmp_path / "scan.csv"
    code, _, _ = run(["scan", "--model", "builtin:bloch2x2", "--grid", "0:0:1:4", "--quantities",
                      "metric_fd,metric_pert,berry,curvature,eigvals,gap,crbound",
                      "--out", str(out_path)], capsys)
    assert code == 0
    table = rows(out_path.read_text())
    for r in table:
        assert r["status"] == "OK"
        assert np.isclose(float(r["G_pert_0_0"]), 1.0)
        assert np.isclose(float(r["crb_0"]), 1.0)
        assert float(r["curve_K2"]) < 1e-6


def test_scan_two_parameter_config(capsys, tmp_path):
    doc = {"dim": 2, "params": ["x", "y"],
           "k0": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
           "k1": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
           "k2": [[[0, 0], [0, -1]], [[0, 1], [0, 0]]]}
    p = tmp_path / "spin.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(["scan", "--model", str(p), "--grid", "1:-0.5:0.5:3", "--at", "0.2,0",
                        "--quantities", "metric_pert,berry,curvature"], capsys)
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert "G_pert_0_1" in header and "berry_0_1" in header
    assert all(r["status"] == "OK" for r in rows(out))


def test_scan_floats_round_trip(capsys):
    _, out, _ = run(["scan", "--model", "builtin:pt2x2", "--grid", "0:0.1:0.3:3:log",
                     "--quantities", "metric_pert"], capsys)
    for r in rows(out):
        g = float(r["G_pert_0_0"])
        assert format(g, ".17g") == r["G_pert_0_0"]
    assert "\r" not in out


@pytest.mark.parametrize("argv", [
    ["scan", "--model", "builtin:nope", "--grid", "0:0:1:3"],
    ["scan", "--model", "builtin:pt2x2", "--grid", "0:1:0:3"],
    ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1:0"],
    ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1"],
    ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1:3", "--quantities", "bogus"],
    ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1:3", "--quantities", ""],
    ["scan", "--model", "builtin:pt2x2", "--grid", "3:0:1:3"],
    ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1:3", "--level", "5"],
    ["scan", "--model", "/nonexistent/model.json", "--grid", "0:0:1:3"],
    ["scan", "--grid", "0:0:1:3"],
    ["frobnicate"],
])
def test_input_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    assert code == 1
    assert capsys.readouterr().err


def test_bad_config_document(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 2, "params": ["g"], "k0": [[[0, 0]], [[1, 0], [0, 0]]]}')
    code, _, err = run(["scan", "--model", str(p), "--grid", "0:0:1:3"], capsys)
    assert code == 1
    assert "k0" in err


def test_ep_pt(capsys):
    code, out, _ = run(["ep", "--model", "builtin:pt2x2", "--bracket", "0.5:1.5"], capsys)
    assert code == 0
    rep = dict(line.split(" = ", 1) for line in out.splitlines())
    assert abs(float(rep["theta_star"]) - 1) < 1e-10
    assert abs(float(rep["fit.slope"]) + 2) < 0.01
    assert abs(float(rep["fit.prefactor"]) - 0.25) < 0.0125
    assert abs(float(rep["abs_kappa_prime"]) - np.sqrt(2)) < 1e-6


def test_ep_planted(capsys):
    code, out, _ = run(["ep", "--model", "builtin:planted3x3", "--bracket", "0:1"], capsys)
    assert code == 0
    rep = dict(line.split(" = ", 1) for line in out.splitlines())
    assert abs(float(rep["theta_star"]) - 0.3) < 1e-9
    assert abs(complex(rep["kappa_prime"]) - 1) < 1e-8


def test_ep_hermitian_exit_2(capsys, tmp_path):
    doc = {"dim": 2, "params": ["t"], "k0": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
           "k1": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]}
    p = tmp_path / "herm.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(["ep", "--model", str(p), "--bracket", "-1:0.7"], capsys)
    assert code == 2
    assert "NotSquareRootEP" in err


def test_ep_no_ep_exit_2(capsys):
    code, _, err = run(["ep", "--model", "builtin:pt2x2", "--bracket", "0:0.8"], capsys)
    assert code == 2
    assert "NoEPInBracket" in err


def test_ep_bad_bracket(capsys):
    code, _, _ = run(["ep", "--model", "builtin:pt2x2", "--bracket", "2:1"], capsys)
    assert code == 1


def test_thermo(capsys, tmp_path):
    p = tmp_path / "two.json"
    p.write_text('{"energies": [0, 1]}')
    code, out, _ = run(["thermo", "--model", str(p), "--beta", "-2:2:5"], capsys)
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["beta", "status", "mean_H", "G", "K2", "dH", "dbeta_bound"]
    for r in table:
        assert float(r["K2"]) == 0.0
        assert np.isclose(float(r["dH"]) * float(r["dbeta_bound"]), 0.5)
    zero = [r for r in table if float(r["beta"]) == 0.0][0]
    assert float(zero["G"]) == 0.25


def test_thermo_degenerate_rows(capsys, tmp_path):
    p = tmp_path / "flat.json"
    p.write_text('[1, 1, 1]')
    code, out, _ = run(["thermo", "--model", str(p), "--beta", "0:1:2"], capsys)
    assert code == 0
    assert all(r["status"] == "DEGENERATE_VELOCITY" for r in rows(out))


def test_thermo_empty_grid(capsys, tmp_path):
    p = tmp_path / "two.json"
    p.write_text('[0, 1]')
    code, _, err = run(["thermo", "--model", str(p), "--beta", "0:1:0"], capsys)
    assert code == 1 and err
    code, _, _ = run(["thermo", "--model", str(tmp_path / "missing.json"), "--beta", "0:1:3"],
                     capsys)
    assert code == 1


def test_scan_deterministic_across_threads(capsys, monkeypatch):
    argv = ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1.6:17",
            "--quantities", "metric_fd,metric_pert,curvature,crbound"]
    monkeypatch.setenv("EIGENGEO_THREADS", "1")
    _, a, _ = run(argv, capsys)
    monkeypatch.setenv("EIGENGEO_THREADS", "4")
    _, b, _ = run(argv, capsys)
    _, c, _ = run(argv, capsys)
    assert a == b == c


def test_bad_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("EIGENGEO_THREADS", "many")
    code, _, _ = run(["scan", "--model", "builtin:pt2x2", "--grid", "0:0:1:3"], capsys)
    assert code == 1


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "eigengeo", "scan", "--model", "builtin:pt2x2",
                          "--grid", "0:0:0.5:2"], capture_output=True, text=True, check=True)
    assert out.stdout.startswith("theta,status,")
