import json
import math
import subprocess
import sys

import pytest

from mg1cr.cli import format_report, main
from conftest import FIXTURES, GOLDEN

GOLDEN_MODELS = ["s1_qbd", "two_phase_qbd", "three_phase_mg1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def assert_close(a, b, path="report"):
    if isinstance(a, dict):
        assert isinstance(b, dict) and sorted(a) == sorted(b), path
        for k in a:
            assert_close(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            assert_close(x, y, f"{path}[{i}]")
    elif isinstance(a, float) and not isinstance(b, bool):
        assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12), path
    else:
        assert a == b, path


@pytest.mark.parametrize("name", GOLDEN_MODELS)
def test_golden_solve(capsys, name):
    code, out, _ = run(capsys, "solve", str(FIXTURES / f"{name}.json"), "--no-timestamp")
    assert code == 0
    golden = (GOLDEN / f"solve_{name}.json").read_text()
    assert_close(json.loads(out), json.loads(golden))


def test_golden_text(capsys):
    code, out, _ = run(capsys, "solve", str(FIXTURES / "s1_qbd.json"), "--no-timestamp",
                       "--format", "text")
    assert code == 0
    golden = (GOLDEN / "solve_s1_qbd.txt").read_text().splitlines()
    lines = out.splitlines()
    assert [ln.split(":")[0] for ln in lines] == [ln.split(":")[0] for ln in golden]


@pytest.mark.parametrize("name", GOLDEN_MODELS)
def test_deterministic(capsys, name):
    args = ("solve", str(FIXTURES / f"{name}.json"), "--no-timestamp")
    first = run(capsys, *args)[1]
    assert run(capsys, *args)[1] == first


def test_s1_values(capsys):
    out = json.loads(run(capsys, "solve", str(FIXTURES / "s1_qbd.json"), "--no-timestamp")[1])
    assert out["solver"]["g"] == [[pytest.approx(1.0, abs=1e-8)]]
    assert out["stationary"]["pi0"][0] == pytest.approx(0.5, abs=1e-6)
    assert out["metrics"]["mean_queue"] == pytest.approx(1.0, abs=1e-6)
    assert out["metrics"]["prob_queue_positive"] == pytest.approx(0.5, abs=1e-6)
    assert out["metrics"]["mean_sojourn"] == pytest.approx(10 / 3, abs=1e-6)


def test_nonergodic_exit(capsys):
    code, out, err = run(capsys, "solve", str(FIXTURES / "nonergodic_qbd.json"))
    assert code == 5 and out == ""
    assert err.startswith("precondition-violation:") and "+0.3" in err


def test_ergodicity_reports_drift(capsys):
    code, out, _ = run(capsys, "ergodicity", str(FIXTURES / "nonergodic_qbd.json"), "--no-timestamp")
    assert code == 0
    rep = json.loads(out)
    assert rep["drift"]["varrho"] == pytest.approx(0.3) and rep["drift"]["ergodic"] is False


def test_validation_exit(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "qbd", "m": 1, "A": [[[0.6]], [[0.1]], [[0.3]]], "B": [[[0.699]]]}')
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2 and err.startswith("validation-error:") and "row 0" in err


def test_parse_exit(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "qbd",\n  "m": 1,,}')
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2 and err.startswith("parse-error:") and "line 2" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", str(tmp_path / "nope.json"))
    assert code == 2 and err.startswith("io-error:")


def test_invalid_argument(capsys):
    code, _, err = run(capsys, "solve", str(FIXTURES / "s1_qbd.json"), "--eps", "-1")
    assert code == 2 and err.startswith("invalid-argument:")


def test_no_convergence(capsys):
    code, _, err = run(capsys, "solve", str(FIXTURES / "two_phase_qbd.json"), "--max-iter", "1")
    assert code == 3 and err.startswith("no-convergence:")


def test_timestamp(capsys):
    out = json.loads(run(capsys, "ergodicity", str(FIXTURES / "s1_qbd.json"))[1])
    assert "timestamp" in out


@pytest.mark.parametrize("cmd", ["stationary", "metrics", "emulate", "estimate"])
def test_other_commands(capsys, cmd):
    code, out, _ = run(capsys, cmd, str(FIXTURES / "three_phase_mg1.json"), "--no-timestamp")
    assert code == 0
    assert json.loads(out)["command"] == cmd


def test_shift_flag(capsys):
    out = json.loads(run(capsys, "solve", str(FIXTURES / "two_phase_qbd.json"), "--no-timestamp",
                         "--shift", "--u", "0.25,0.75")[1])
    assert out["solver"]["method"] == "shifted-cyclic-reduction"
    assert out["solver"]["certified_bound"] > 0


def test_emulate_fidelity(capsys):
    out = json.loads(run(capsys, "emulate", str(FIXTURES / "s1_qbd.json"), "--no-timestamp",
                         "--samples", "64")[1])
    assert out["emulation"]["max_fidelity"] <= 1e-6
    assert all(s["n_samples"] >= 64 for s in out["emulation"]["steps"])


def test_estimate(capsys, tmp_path):
    model = tmp_path / "m4.json"
    a = [[[0.0] * 4 for _ in range(4)] for _ in range(8)]
    for k, w in enumerate([0.4, 0.3, 0.1, 0.05, 0.05, 0.04, 0.03, 0.03]):
        for i in range(4):
            a[k][i][i] = w
    b = [[[0.0] * 4 for _ in range(4)] for _ in range(7)]
    for i in range(4):
        b[0][i][i] = 1.0
    model.write_text(json.dumps({"type": "mg1", "m": 4, "A": a, "B": b}))
    out = json.loads(run(capsys, "estimate", str(model), "--no-timestamp")[1])
    assert out["estimate"]["qubits"] == 352 and out["estimate"]["n_q"] == 32


def test_csv_format(capsys):
    code, out, _ = run(capsys, "ergodicity", str(FIXTURES / "s1_qbd.json"), "--no-timestamp",
                       "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "key,value" and "drift.varrho,-0.3" in "\n".join(lines)


def test_format_rejects_nan():
    with pytest.raises(ValueError):
        format_report({"x": float("nan")}, "json")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mg1cr", "estimate",
                          str(FIXTURES / "s1_qbd.json"), "--no-timestamp"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["estimate"]["qubits"] >= 1
