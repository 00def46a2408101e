import csv
import io
import json

import pytest

from weylcoef.cli import run


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_q_command_csv_and_summary():
    code, out, err = _run(["q", "--zoo", "diag41", "--rmin", "1", "--rmax", "100",
                           "--per-decade", "1"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["r"]) for r in rows] == pytest.approx([1.0, 10.0, 100.0])
    assert all(abs(complex(r["q"]) - 2j) < 1e-9 for r in rows)
    assert "CHECK q_certified PASS" in err
    assert err.strip().splitlines()[-1].startswith("SUMMARY PASS checks=1")


def test_out_file_moves_summary_to_stdout(tmp_path):
    target = tmp_path / "env.csv"
    code, out, err = _run(["envelopes", "--zoo", "identity", "--rmin", "1", "--rmax", "10",
                           "--per-decade", "1", "--out", str(target)])
    assert code == 0 and err == ""
    assert out.startswith("CHECK envelopes_positive PASS")
    assert target.read_text().splitlines()[0] == "r,t_ring,t_hat,A,L"


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": {"kind": "diagonal", "h1": 9, "h2": 1},
                               "r_grid": {"min": 1, "max": 10, "per_decade": 1}}))
    code, out, _ = _run(["q", "--config", str(cfg), "--rmax", "1"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1 and abs(complex(rows[0]["q"]) - 3j) < 1e-9


@pytest.mark.parametrize("command", ["theorem1", "prop24", "cor25", "slowvar"])
def test_estimate_commands_on_identity(command):
    code, out, err = _run([command, "--zoo", "identity", "--rmin", "1", "--rmax", "100",
                           "--per-decade", "1"])
    assert code == 0, err
    assert "SUMMARY PASS" in err


def test_band_command():
    code, _, err = _run(["band", "--zoo", "free", "--rmin", "1", "--rmax", "10",
                         "--per-decade", "1", "--theta", "0.5"])
    assert code == 0 and "CHECK band PASS" in err


def test_zoo_string_sl_tails_commands():
    assert _run(["zoo", "hpl"])[0] == 0
    assert _run(["string", "--rmin", "1", "--rmax", "10", "--per-decade", "1"])[0] == 0
    assert _run(["sl", "--rmin", "1", "--rmax", "10", "--per-decade", "1"])[0] == 0
    code, out, err = _run(["tails", "--zoo", "identity"])
    assert code == 0 and "tails_at0_sides_agree PASS" in err


def test_verify_all_subset(tmp_path):
    cfg = tmp_path / "va.json"
    cfg.write_text(json.dumps({"extra": {"criteria": [1]}}))
    code, out, err = _run(["verify-all", "--config", str(cfg)])
    assert code == 0
    assert "CHECK 01_constant_models PASS" in err


def test_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"r_grid": {"min": -1}}))
    code, _, err = _run(["q", "--config", str(bad)])
    assert code == 2 and "error:" in err
    assert _run(["zoo"])[0] == 2
    with pytest.raises(SystemExit) as exc:
        _run(["q", "--zoo", "nonsense"])
    assert exc.value.code == 2


def test_failed_check_exit_1():
    code, _, err = _run(["slowvar", "--zoo", "hpl", "--rmin", "1e3", "--rmax", "1e4",
                         "--per-decade", "1"])
    assert code == 1 and "SUMMARY FAIL" in err


def test_malformed_model_names_the_invariant(tmp_path):
    spec = tmp_path / "m.json"
    spec.write_text(json.dumps({"kind": "powerlog", "alpha": 2, "beta1": 1, "beta2": 1}))
    code, _, err = _run(["q", "--model", str(spec)])
    assert code == 2 and "beta1 != beta2" in err


def test_csv_is_deterministic():
    argv = ["q", "--zoo", "powerlog", "--rmin", "10", "--rmax", "1e3", "--per-decade", "2"]
    assert _run(argv)[1] == _run(argv)[1]
