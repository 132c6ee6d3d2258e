import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from shearstab import cli, tables


def run(tmp_path, argv, config=None, name="run.yaml"):
    args = list(argv)
    if config is not None:
        p = tmp_path / name
        p.write_text(config)
        args += ["--config", str(p)]
    return cli.run_command(args + ["--out", str(tmp_path / "out")])


def test_cascade_thm3_json(capsys):
    assert cli.run_command(["cascade", "run", "--scenario", "thm3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data["scales"]) == {"0", "1/2", "3/4", "11/16", "13/16"}
    assert data["time_exponent"] == "1/2"


def test_cascade_unknown_scenario(capsys):
    assert cli.run_command(["cascade", "run", "--scenario", "thm7"]) == 2
    assert "thm7" in capsys.readouterr().err


def test_empty_nu_list_is_usage_error(tmp_path, capsys):
    assert run(tmp_path, ["os", "neutral"], "nu_list: []\n") == 2
    assert "nu_list" in capsys.readouterr().err


def test_malformed_config_reports_position(tmp_path, capsys):
    assert run(tmp_path, ["os", "eig"], "nu_list: [1e-5\nalphas: 0.1\n") == 2
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_missing_config_file(capsys):
    assert cli.run_command(["os", "eig", "--config", "/nonexistent/run.yaml"]) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_numerical_failure_names_operation(tmp_path, capsys):
    assert run(tmp_path, ["landau", "run"], "lambda: 0.1\nphi0: 0\n") == 1
    assert "amplitude.integrate_landau failed" in capsys.readouterr().err


def test_os_eig_is_byte_identical_across_workers(tmp_path):
    cfg = "profile: {kind: exp}\nnu_list: [1e-5, 1e-6]\nalpha_tilde: [2.5, 2.7, 2.9]\n"
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    assert run(tmp_path / "a", ["os", "eig", "--workers", "1"], cfg) == 0
    assert run(tmp_path / "b", ["os", "eig", "--workers", "2"], cfg) == 0
    one = (tmp_path / "a" / "out" / "os_eig.csv").read_bytes()
    two = (tmp_path / "b" / "out" / "os_eig.csv").read_bytes()
    assert one == two
    rows = list(csv.DictReader(one.decode().splitlines()))
    assert [float(r["nu"]) for r in rows] == [1e-5] * 3 + [1e-6] * 3
    assert all(float(r["residual"]) < 1e-9 for r in rows)


def test_rayleigh_scan_csv(tmp_path):
    cfg = "profile: {kind: inflection}\nalphas: {start: 0.6, stop: 0.8, num: 2}\n"
    assert run(tmp_path, ["rayleigh", "scan"], cfg) == 0
    header, rows = tables.read_csv(tmp_path / "out" / "rayleigh_scan.csv")
    assert header == ["alpha", "re_c", "im_c", "converged"]
    assert len(rows) == 2 and all(float(r[2]) > 0 for r in rows)


def test_landau_run_outputs(tmp_path):
    cfg = json.dumps({"nu": 1e-6, "N": 3, "A": -1.0, "phi0": 1e-4})
    assert run(tmp_path, ["landau", "run"], cfg, name="landau.json") == 0
    summary = json.loads((tmp_path / "out" / "landau_summary.json").read_text())
    assert summary["verdict"] == "Saturates"
    assert summary["amplitude"] == pytest.approx(10**-1.5, rel=1e-12)
    header, rows = tables.read_csv(tmp_path / "out" / "landau.csv")
    assert float(rows[-1][1]) == pytest.approx(10**-1.5, rel=1e-3)


def test_os_mode_table(tmp_path):
    cfg = "nu: 1e-6\nalpha_tilde: 2.7\nn: 800\n"
    assert run(tmp_path, ["os", "mode"], cfg) == 0
    cols, meta = tables.read_table(tmp_path / "out" / "mode.osm")
    assert set(cols) == {"y", "psi", "omega"}
    assert np.max(np.abs(cols["psi"])) == pytest.approx(1.0)
    assert meta["nu"] == 1e-6 and len(meta["scale_lengths"]) == 3


def test_verify_fast_tier(tmp_path, capsys):
    status = cli.run_command(["verify", "--tier", "fast", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln.startswith("[")]
    assert len(lines) == 6
    assert status == (0 if all(ln.startswith("[PASS]") for ln in lines) else 1)
    assert (tmp_path / "verify_fast.csv").exists()


def test_os_neutral_end_to_end(tmp_path):
    assert run(tmp_path, ["os", "neutral"], "nu_list: [1e-4, 1e-5, 1e-6, 1e-7]\n") == 0
    fit = json.loads((tmp_path / "out" / "neutral_fit.json").read_text())
    header, rows = tables.read_csv(tmp_path / "out" / "neutral.csv")
    assert header == ["nu", "alpha_minus", "alpha_plus"] and rows
    assert abs(fit["e_minus"] - 0.25) <= 0.03 and abs(fit["e_plus"] - 1 / 6) <= 0.03, fit


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "shearstab.cli", "cascade", "run", "--scenario", "thm1"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert json.loads(r.stdout)["scales"] == ["-1/4", "0", "1/4"]
