import json

import pytest

from robust_bdma.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "solve" in out
    assert run(capsys, "solve", "--help")[0] == 0


def test_unknown_flag(capsys):
    code, _, err = run(capsys, "solve", "--bogus")
    assert code == 1 and "usage" in err
    assert run(capsys)[0] == 1


def test_solve_desk(capsys):
    code, out, _ = run(capsys, "solve", "--n", "128", "--k", "30", "--gamma-db", "10", "--g", "0.5", "--no-channels")
    assert code == 0
    sol = json.loads(out)["solution"]
    assert sol["info_powers"] == [0.3125] * 30
    assert sol["total_power"] == 9.375


def test_solve_validation_error(capsys):
    code, _, err = run(capsys, "solve", "--g", "1.2")
    assert code == 1 and "g:" in err
    code, _, err = run(capsys, "solve", "--n", "4", "--k", "4")
    assert code == 1 and "n_users" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_antennas": 16, "n_users": 3, "g": 0.2}))
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--g", "0.0", "--no-channels")
    assert code == 0
    assert json.loads(out)["solution"]["info_powers"] == pytest.approx([10 / 16] * 3)
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "solve", "--config", str(bad))[0] == 1
    assert run(capsys, "solve", "--config", str(tmp_path / "missing.json"))[0] == 1


def test_solve_then_verify(tmp_path, capsys):
    doc = tmp_path / "s.json"
    assert run(capsys, "solve", "--n", "8", "--k", "2", "--g", "0.05", "--out", str(doc))[0] == 0
    code, out, _ = run(capsys, "verify", str(doc))
    assert code == 0
    rep = json.loads(out)
    assert rep["verdicts_agree"]
    users = [c for c in rep["constraints"] if c["kind"] == "user_constraint"]
    assert all(c["lmi_satisfied"] for c in users)
    assert run(capsys, "verify", str(tmp_path / "nope.json"))[0] == 1


def test_sweep_command(tmp_path, capsys):
    spec = tmp_path / "gs.json"
    spec.write_text(json.dumps({"swept_parameter": "g", "values": [0.1, 0.2],
                                "fixed": {"n_antennas": 8, "n_users": 2, "n_trials": 5}}))
    code, out, _ = run(capsys, "sweep", str(spec), "--out", str(tmp_path / "o"))
    assert code == 0
    csv = (tmp_path / "o" / "gs.csv").read_bytes()
    assert csv.startswith(b"sweep_value,method,")
    assert (tmp_path / "o" / "gs.json").exists()
    spec.write_text(json.dumps({"swept_parameter": "g", "values": [0.2, 0.1]}))
    assert run(capsys, "sweep", str(spec))[0] == 1


def test_repro_small(tmp_path, capsys):
    code, out, err = run(capsys, "repro", "fig6", "--trials", "20", "--out", str(tmp_path))
    assert code == 0, err
    assert (tmp_path / "fig6.csv").exists()
