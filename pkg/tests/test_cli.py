from __future__ import annotations

import json

import numpy as np
import pytest

from lbmo_euler.cli import main
from lbmo_euler.f2d import save_scalar
from lbmo_euler.fields import GridSpec, ScalarField2D, sample_analytic

SMALL = ["--set", "grid=64", "--set", "dt=0.01", "--set", "T=0.2", "--set", "diag_every=5",
         "--set", "ll_budget=1000"]


def test_verify_kernel_oracle(tmp_path, capsys):
    assert main(["verify", "kernel-oracle", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert (tmp_path / "conformance.csv").exists()


def test_unknown_scenario(capsys):
    assert main(["verify", "warp-drive"]) == 2
    assert "known scenarios: lbmo-example" in capsys.readouterr().err


def test_bad_override_and_missing_file(tmp_path, capsys):
    assert main(["verify", "conservation", "--set", "grid"]) == 2
    assert main(["verify", "conservation", "--set", "colour=1"]) == 2
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    assert main(["norms", str(tmp_path / "missing.f2d")]) == 2
    assert "error:" in capsys.readouterr().err


def test_cfl_violation_is_numerical_abort(tmp_path, capsys):
    rc = main(["verify", "conservation", "--out", str(tmp_path), "--set", "grid=64", "--set", "dt=0.5",
               "--set", "T=1.0"])
    assert rc == 3
    assert "CFL" in capsys.readouterr().err


def test_failing_verdict_exit_one(tmp_path):
    # an impossible threshold turns the envelope verdict off
    rc = main(["verify", "growth", "--out", str(tmp_path), "--set", "grid=64", "--set", "dt=0.01",
               "--set", "T=0.2", "--set", "diag_every=5", "--set", "centers_per_scale=4",
               "--set", "ll_budget=1000", "--set", "mollify_n=4", "--set", "residual_tol=-1.0"])
    assert rc == 1


def test_determinism(tmp_path):
    for k in ("a", "b"):
        assert main(["verify", "conservation", "--seed", "7", "--out", str(tmp_path / k), *SMALL]) == 0
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    assert a == (tmp_path / "b" / "diagnostics.csv").read_bytes()
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    ra.pop("timestamp"), rb.pop("timestamp")
    assert ra == rb


def test_norms_command(tmp_path, capsys):
    g = GridSpec(64, 64)
    save_scalar(tmp_path / "c.f2d", ScalarField2D(g, np.full(g.shape, 3.0)))
    assert main(["norms", str(tmp_path / "c.f2d"), "--out", str(tmp_path / "c.json")]) == 0
    d = json.loads((tmp_path / "c.json").read_text())
    assert d["bmo"] == 0.0 and d["lbmo"] == 0.0 and d["lbmo2"] == 0.0
    assert d["lpinf"] == 3.0
    save_scalar(tmp_path / "s.f2d", sample_analytic(g, lambda x, y: np.sin(x)))
    capsys.readouterr()
    assert main(["norms", str(tmp_path / "s.f2d"), "--family", "1,4"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["family"]["r_min"] == 0.5 and d["bmo"] > 0
    assert main(["norms", str(tmp_path / "s.f2d"), "--family", "6"]) == 2


def test_run_flow_report(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('scenario = "conservation"\ngrid = 64\ndt = 0.01\nT = 0.2\ndiag_every = 5\n'
                   'snapshot_every = 10\nll_budget = 1000\nout_dir = "%s"\n' % (tmp_path / "run"))
    assert main(["run", str(cfg)]) == 0
    run_dir = tmp_path / "run"
    assert main(["flow", str(run_dir), "--times", "0.1", "0.2", "--pair-budget", "2000",
                 "--ll-budget", "1000"]) == 0
    lines = (run_dir / "flow.csv").read_text().splitlines()
    assert lines[0] == "t,star,bound,ratio,warning" and len(lines) == 3
    capsys.readouterr()
    assert main(["report", str(run_dir)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["scenario"] == "conservation"


def test_flow_without_frames(tmp_path):
    assert main(["verify", "kernel-oracle", "--out", str(tmp_path)]) == 0
    assert main(["flow", str(tmp_path), "--times", "0.1"]) == 2


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["--help"])
    assert ei.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("run", "verify", "norms", "flow", "report"):
        assert cmd in out
