import json
import subprocess
import sys

import pytest

from istms.cli import run
from istms.sweeps import read_csv, read_json

TS = ["--timestamp", "2000-01-01T00:00:00+00:00"]


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, err = call(capsys, "validate", "--g", "1", "--j", "10", "--lambda", "0.45")
    assert code == 0
    assert "rwa_two_mode" in out and "[PASS] stability" in out


def test_unknown_flag(capsys):
    code, out, err = call(capsys, "validate", "--bogus", "1")
    assert code == 1
    assert "usage:" in err
    assert call(capsys)[0] == 1


def test_domain_error_exit_code(capsys):
    code, out, err = call(capsys, "snr", "--chi", "0.05", "--lambda", "0.6", "--tau", "1")
    assert code == 1 and "error" in err and out == ""


def test_solver_error_exit_code(capsys):
    code, _, err = call(capsys, "tau-star", "--chi", "0.0001", "--nbar0", "0.001")
    assert code == 2 and "solver error" in err


def test_snr_example(capsys):
    code, out, _ = call(capsys, "snr", "--chi", "0.05", "--lambda", "0.45", "--nbar0", "10", "--tau", "100", *TS)
    assert code == 0
    res = read_csv(out)
    row = dict(zip(res.columns, res.rows[0]))
    assert row["rate_longtime"] == pytest.approx(400 * 0.1, rel=1e-12)
    assert row["snr_squared_longtime"] == pytest.approx(4000.0, rel=1e-12)
    # the finite-time value is still far from its asymptote this close to threshold
    assert row["snr_squared"] == pytest.approx(1329, rel=1e-3)
    assert row["snr_squared"] == pytest.approx(row["snr"] ** 2, rel=1e-12)


def test_snr_with_loss(capsys):
    code, out, _ = call(capsys, "snr", "--chi", "0.05", "--lambda", "0.45", "--eta", "0.01", "--tau", "1", "10")
    assert code == 0 and len(read_csv(out).rows) == 2
    code, _, _ = call(capsys, "snr", "--chi", "0.05", "--eta", "0.01", "--kappa-int", "0.1")
    assert code == 1


def test_tau_star(capsys):
    code, out, _ = call(capsys, "tau-star", "--chi", "0.05", "--lambda", "0.45", "--nbar0", "100", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["rows"][0][1] == pytest.approx(5.723271838285451, rel=1e-6)


def test_spectrum_default_dataset(capsys):
    code, out, _ = call(capsys, "spectrum", "--workers", "1", *TS)
    assert code == 0
    res = read_csv(out)
    assert res.manifest["sweep"] == "fig2_spectrum"
    assert sorted(set(res.column("chi"))) == [0.001, 0.1, 0.5, 1.0]
    assert len(res.rows) == 4 * 2001


def test_csv_json_agree(capsys):
    _, a, _ = call(capsys, "dos", "--points", "11", "--workers", "1", *TS)
    _, b, _ = call(capsys, "dos", "--points", "11", "--workers", "1", "--format", "json", *TS)
    ra, rb = read_csv(a), read_json(b)
    assert ra.rows == rb.rows and ra.manifest == rb.manifest


def test_config_precedence(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("chi = 0.1\nlambda = 0.2\n")
    _, out, _ = call(capsys, "snr", "--config", str(cfg), "--tau", "1")
    assert read_csv(out).manifest["params"]["chi"] == 0.1
    _, out, _ = call(capsys, "snr", "--config", str(cfg), "--chi", "0.3", "--tau", "1")
    m = read_csv(out).manifest["params"]
    assert (m["chi"], m["lam"]) == (0.3, 0.2)
    monkeypatch.setenv("ISTMS_CONFIG", str(cfg))
    _, out, _ = call(capsys, "snr", "--tau", "1")
    assert read_csv(out).manifest["params"]["lam"] == 0.2


def test_output_file_and_plot(capsys, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "d.csv"
    code, stdout, err = call(capsys, "dos", "--points", "21", "--workers", "1", "--output", str(out), "--plot")
    assert code == 0 and stdout == ""
    assert out.exists() and out.with_suffix(".svg").exists()
    assert call(capsys, "dos", "--plot")[0] == 1


def test_fig3_and_loss(capsys):
    code, out, _ = call(capsys, "fig3", "--nbar-grid", "10", "50", "--workers", "1")
    res = read_csv(out)
    assert code == 0 and list(res.column("status")) == ["invalid", "ok"]
    code, out, _ = call(capsys, "loss", "--external", "0.01", "--nbar-grid", "20", "100", "--workers", "1")
    assert code == 0 and len(read_csv(out).rows) == 2


def test_jc_compare_small(capsys):
    code, out, _ = call(capsys, "jc-compare", "--n-max", "4", "--lambda-grid", "0.5", "--workers", "1")
    assert code == 0
    res = read_csv(out)
    assert res.rows[0][-1] == "ok" and 0 < res.rows[0][2] < 0.01


def test_console_script_broken_pipe():
    p = subprocess.run(f"{sys.executable} -m istms.cli spectrum --workers 1 | head -n 1",
                       shell=True, capture_output=True, text=True)
    assert p.stdout.startswith("# manifest:")
    assert "Broken pipe" not in p.stderr
