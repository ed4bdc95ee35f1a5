import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from semiharm.cli import MEANS_HEADER, RESIDUE_HEADER, dumps, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_residue_identity_log(capsys):
    code, out, _ = run(capsys, "residue", "--covering", "identity", "--alpha", "1", "--s", "0")
    assert code == 0
    assert out.splitlines()[0] == ",".join(RESIDUE_HEADER)
    table = rows(out)
    assert len(table) == 3
    assert all(float(r["abs_err"]) < 1e-8 for r in table)
    assert all(abs(float(r["res_re"]) + 1) < 1e-8 for r in table)


def test_means_csv_and_out_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "means", "--covering", "sqrt", "--field", "abs2(w)", "--field", "re(z)",
                       "--centers", "0|1;-1", "--radii", "0.3,0.6", "--out", str(tmp_path))
    assert code == 0
    assert out.splitlines()[0] == ",".join(MEANS_HEADER)
    table = rows(out)
    assert len(table) == 2 * 2 * 2
    assert (tmp_path / "means.csv").read_text() == out
    first = table[0]
    assert first["nu"] == "2" and float(first["identity_residual"]) < 1e-7
    # 17 significant digits
    assert first["r"] == "0.29999999999999999"


def test_classify_exit_codes(capsys):
    code, out, _ = run(capsys, "classify", "--covering", "sqrt", "--field", "re(w)")
    assert code == 0 and json.loads(out)["verdict"] == "semi-harmonic"
    code, out, _ = run(capsys, "classify", "--covering", "identity", "--field", "abs2(z)")
    assert code == 1 and json.loads(out)["verdict"] == "not semi-harmonic"


def test_decompose(capsys):
    code, out, _ = run(capsys, "decompose", "--poly", "x1^2", "--n", "2")
    assert code == 0
    assert "H_2 = 1/2*x1^2 - 1/2*x2^2" in out and "H_0 = 1/2" in out and "exact = true" in out


def test_neumann(capsys):
    code, out, _ = run(capsys, "neumann", "--covering", "sqrt", "--poly", "x1^2*x2^2")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["samples"] == 200


def test_non_monic_covering_is_input_error(capsys):
    spec = json.dumps({"m": 1, "fiber_degree": 2, "coeffs": {"w^0": "-z1", "w^2": "2"}})
    code, out, err = run(capsys, "means", "--covering", spec, "--field", "re(z)")
    assert code == 2 and out == "" and "not monic" in err


@pytest.mark.parametrize("scenario,message", [
    ({"operation": "means", "field": "re(z)", "speed": 3}, "unknown scenario key"),
    ({"operation": "means", "field": "re(z)", "radii": [0.5, 2.5]}, "radii"),
    ({"operation": "means", "field": "re(z)", "tol": -1}, "tol"),
    ({"operation": "means", "field": "re(z", "radii": [0.5]}, ""),
    ({"operation": "integrate"}, "operation"),
])
def test_scenario_validation(capsys, tmp_path, scenario, message):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scenario))
    code, _, err = run(capsys, "run", "--scenario", str(path))
    assert code == 2 and message in err


def test_malformed_scenario_json_reports_line(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{\n  "operation": "means",\n  "field": \n}')
    code, _, err = run(capsys, "run", "--scenario", str(path))
    assert code == 2 and "line 4" in err


def test_scenario_run_and_override(capsys, tmp_path):
    cov = {"m": 1, "fiber_degree": 2, "coeffs": {"w^0": "-z1", "w^1": "0"}, "base_center": [0, 0],
           "base_radius": 2.0}
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"operation": "residue", "covering": cov, "alpha": 0, "s": 2,
                                "radii": [0.2, 0.4]}))
    code, out, _ = run(capsys, "run", "--scenario", str(path))
    table = rows(out)
    assert code == 0 and len(table) == 2
    # nu = 2 at the branch point doubles the closed form
    assert float(table[0]["closed_form_re"]) == pytest.approx(2 / 0.04)
    code, out, _ = run(capsys, "residue", "--scenario", str(path), "--radii", "0.3")
    assert code == 0 and len(rows(out)) == 1


def test_determinism_across_pool_sizes(capsys, tmp_path):
    args = ["means", "--covering", "cusp", "--field", "abs2(w) + re(z)", "--field", "re(w)", "--radii", "0.2,0.5"]
    outs = []
    for workers in ("1", "3", "1"):
        code, out, _ = run(capsys, *args, "--workers", workers)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] == outs[2]


def test_json_writer():
    text = dumps({"x": 0.1, "c": 1 + 2j, "n": float("nan"), "l": [1, 2.5]})
    d = json.loads(text)
    assert d == {"x": 0.1, "c": [1, 2], "n": None, "l": [1, 2.5]}
    assert "0.10000000000000001" in text


def test_verify_console_script(tmp_path):
    exe = shutil.which("semiharm")
    cmd = [exe] if exe else [sys.executable, "-m", "semiharm"]
    proc = subprocess.run(cmd + ["verify", "--out", str(tmp_path)], capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(proc.stdout)
    assert summary["passed"] and summary["seed"] == 20070703
    assert (tmp_path / "verify_summary.json").read_text() == proc.stdout
    modules = {c["module"] for c in summary["checks"]}
    assert modules >= {"covering", "fields", "quadrature", "means", "residue", "harmpoly", "classify", "cli"}
    assert summary["traceability"]
