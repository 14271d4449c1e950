from __future__ import annotations

import math

import numpy as np
import pytest

from lbmo_euler.biot_savart import SpectralWorkspace
from lbmo_euler.fields import GridSpec, ScalarField2D, lp_norm, sample_analytic
from lbmo_euler.initial import random_smooth, taylor_green, two_mode
from lbmo_euler.norms import make_ball_family
from lbmo_euler.solver import (
    DIAG_COLUMNS,
    NumericalAbort,
    SolverCFLError,
    SolverConfig,
    conservation_report,
    load_run,
    persist,
    rhs,
    run,
    step_rk4,
)

G64 = GridSpec(64, 64)
WS64 = SpectralWorkspace(G64)
G128 = GridSpec(128, 128)
WS128 = SpectralWorkspace(G128)


@pytest.mark.parametrize("make", [
    taylor_green,
    lambda g: sample_analytic(g, lambda x, y: np.cos(x)),
    lambda g: ScalarField2D(g, np.zeros(g.shape)),
], ids=["taylor-green", "cos", "zero"])
def test_rhs_vanishes_on_steady_states(make):
    r = rhs(make(G128), WS128)
    assert np.max(np.abs(r.values)) <= 1e-12


def test_rhs_mean_free():
    w = random_smooth(G64, 3, kmax=10)
    assert abs(rhs(w, WS64).mean()) <= 1e-12
    with pytest.raises(ValueError):
        rhs(w + sample_analytic(G64, lambda x, y: 0 * x + 1.0), WS64)


def test_taylor_green_single_step():
    w = taylor_green(G128)
    cfg = SolverConfig(G128, 1e-2, 1e-2)
    assert np.max(np.abs(step_rk4(w, WS128, cfg).values - w.values)) <= 1e-10


def test_zero_stays_zero():
    z = ScalarField2D(G64, np.zeros(G64.shape))
    assert not step_rk4(z, WS64, SolverConfig(G64, 0.1, 0.1)).values.any()


def _integrate(w, ws, dt, T, sign=1.0):
    cfg = SolverConfig(w.grid, dt, T)
    for _ in range(cfg.n_steps):
        w = step_rk4(w, ws, cfg, dt=sign * dt)
    return w


def test_fourth_order_convergence():
    w0 = two_mode(G64)
    d0 = 0.5 / 12
    ref = _integrate(w0, WS64, d0 / 32, 0.5)
    e = [lp_norm(_integrate(w0, WS64, dt, 0.5) - ref, 2) for dt in (d0, d0 / 2, d0 / 4)]
    # measured ratios 16.0015 and 16.0053
    assert e[0] / e[1] == pytest.approx(16.0, rel=0.05)
    assert e[1] / e[2] == pytest.approx(16.0, rel=0.05)


def test_time_reversal():
    w0 = two_mode(G64)
    back = _integrate(_integrate(w0, WS64, 1e-3, 0.5), WS64, 1e-3, 0.5, sign=-1.0)
    assert lp_norm(back - w0, 2) / lp_norm(w0, 2) <= 1e-5


@pytest.mark.slow
def test_dealiasing_improves_conservation():
    g = GridSpec(256, 256)
    w0 = random_smooth(g, 0, kmax=48)
    drift = {}
    for d in (True, False):
        rec = run(w0, SolverConfig(g, 1e-3, 0.25, dealias=d, diag_every=50, ll_budget=1000))
        drift[d] = conservation_report(rec)["lp2"]
    assert drift[True] < drift[False]


def test_run_diagnostics_and_mean():
    w0 = random_smooth(G64, 1, kmax=6)
    fam = make_ball_family(G64, 1, 4, 0)
    rec = run(w0, SolverConfig(G64, 1e-2, 0.5, diag_every=10, snapshot_every=25, ll_budget=1000), fam)
    assert rec.times == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    assert set(rec.diagnostics[0]) == set(DIAG_COLUMNS)
    assert set(rec.snapshot_times()) <= set(rec.times) | {0.25}
    assert np.max(np.abs(rec.column("mean") - rec.column("mean")[0])) <= 1e-12
    assert np.all(np.isfinite(rec.column("lbmo")))
    rep = conservation_report(rec)
    assert rep["lp2"] <= 1e-4 and rep["mean"] <= 1e-12


def test_stationary_and_zero_reports():
    rec = run(taylor_green(G64), SolverConfig(G64, 1e-2, 0.2, diag_every=5, ll_budget=1000))
    assert max(conservation_report(rec).values()) <= 1e-10
    z = run(ScalarField2D(G64, np.zeros(G64.shape)), SolverConfig(G64, 1e-2, 0.02, ll_budget=1000))
    assert conservation_report(z) == {"lp2": 0.0, "lpP": 0.0, "mean": 0.0, "energy": 0.0}


def test_mollified_start():
    w0 = random_smooth(G64, 1, kmax=20)
    rec = run(w0, SolverConfig(G64, 1e-2, 0.0, mollify_n=4, ll_budget=1000))
    assert rec.diagnostics[0]["lp2"] < lp_norm(w0, 2)


def test_config_validation():
    with pytest.raises(ValueError, match="integer"):
        SolverConfig(G64, 0.03, 0.1)
    with pytest.raises(ValueError):
        SolverConfig(G64, -1.0, 1.0)


def test_cfl_error_names_step():
    with pytest.raises(SolverCFLError, match="step 0"):
        run(taylor_green(G64, amp=10.0), SolverConfig(G64, 0.1, 0.2, ll_budget=1000))


def test_nan_aborts_with_last_good(monkeypatch):
    import lbmo_euler.solver as solver

    w0 = random_smooth(G64, 2, kmax=4)
    real = solver._rk4
    calls = {"n": 0}

    def poisoned(w, *a, **k):
        calls["n"] += 1
        out = real(w, *a, **k)
        return out * math.nan if calls["n"] == 3 else out

    monkeypatch.setattr(solver, "_rk4", poisoned)
    with pytest.raises(NumericalAbort) as ei:
        run(w0, SolverConfig(G64, 1e-2, 0.1, diag_every=2, ll_budget=1000))
    assert ei.value.step == 3
    assert np.all(np.isfinite(ei.value.last_good.values))
    assert ei.value.record.times == pytest.approx([0.0, 0.02])


def test_persist_roundtrip(tmp_path):
    rec = run(two_mode(G64), SolverConfig(G64, 1e-2, 0.1, diag_every=5, snapshot_every=5, ll_budget=1000))
    persist(rec, tmp_path)
    assert (tmp_path / "diagnostics.csv").read_text().splitlines()[0] == ",".join(DIAG_COLUMNS)
    back = load_run(tmp_path)
    assert back.config == rec.config
    for c in DIAG_COLUMNS:
        assert np.array_equal(back.column(c), rec.column(c), equal_nan=True)
    for k, fld in rec.snapshots.items():
        assert np.array_equal(back.snapshots[k].values, fld.values)
