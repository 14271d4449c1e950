from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lbmo_euler.experiments import (
    SCENARIOS,
    ExperimentConfig,
    Table,
    compose,
    growth_fit,
    load_config,
    load_frames,
    read_table,
    recompute_report,
    run_scenario,
    scenario_composition,
    verdicts_conservation,
    verdicts_growth,
    write_outputs,
    write_table,
)
from lbmo_euler.fields import GridSpec, sample_analytic
from lbmo_euler.mapzoo import MapZooEntry


def test_config_defaults_and_validation():
    cfg = ExperimentConfig("growth", seed=3)
    assert (cfg.grid, cfg.dt, cfg.T, cfg.mollify_n) == (256, 4e-3, 2.0, 16)
    assert cfg.name == "growth-seed3" and cfg.out_dir.endswith("growth-seed3")
    with pytest.raises(ValueError, match="known: " + ", ".join(SCENARIOS)):
        ExperimentConfig("nope")
    with pytest.raises(ValueError, match="unknown config keys: bogus"):
        ExperimentConfig.from_mapping({"scenario": "growth", "bogus": 1})
    assert ExperimentConfig.from_mapping(cfg.to_dict()) == cfg


def test_load_config_toml_and_json(tmp_path):
    (tmp_path / "a.toml").write_text('scenario = "conservation"\nseed = 4\ngrid = 64\n')
    (tmp_path / "b.json").write_text(json.dumps({"scenario": "conservation", "seed": 4, "grid": 64}))
    assert load_config(tmp_path / "a.toml") == load_config(tmp_path / "b.json")


@given(st.lists(st.tuples(st.floats(allow_nan=False), st.integers(-10**6, 10**6), st.booleans(),
                          st.sampled_from(["sign", "lbmo-bump"])), max_size=8))
def test_table_roundtrip(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("t") / "x.csv"
    write_table(p, Table(["a", "b", "c", "d"], [list(r) for r in rows]))
    back = read_table(p)
    assert back.header == ["a", "b", "c", "d"]
    for r, b in zip(rows, back.rows):
        assert b == [r[0], float(r[1]), float(r[2]), r[3]]


def _diag(t, lbmo, ll, l2=None, mean=None):
    n = len(t)
    return Table(["t", "lp2", "lbmo", "ll", "mean"],
                 [[t[i], (l2 or [1.0] * n)[i], lbmo[i], ll[i], (mean or [0.0] * n)[i]] for i in range(n)])


def test_growth_fit_exact_exponential():
    t = np.linspace(0, 2, 9)
    s = 3.0 * np.exp(0.4 * t)
    a, b, *_ , res = growth_fit(_diag(list(t), list(s / 2), list(s / 2)))
    assert a == pytest.approx(math.log(3.0)) and b == pytest.approx(0.4)
    assert np.max(np.abs(res)) < 1e-12


def test_growth_verdict_skips_degenerate():
    assert verdicts_growth({"diagnostics.csv": _diag([0, 1], [0, 0], [0, 0])}, None) == {"envelope": "skip"}
    cfg = ExperimentConfig("growth")
    bumpy = _diag([0, 1, 2], [1, math.e, 1], [0, 0, 0])
    assert verdicts_growth({"diagnostics.csv": bumpy}, cfg) == {"envelope": False}


def test_conservation_verdicts():
    ok = _diag([0, 1], [0, 0], [0, 0], l2=[2.0, 2.0 - 1e-6], mean=[0.0, 1e-14])
    assert all(v is True for v in verdicts_conservation({"diagnostics.csv": ok}, None).values())
    grows = _diag([0, 1], [0, 0], [0, 0], l2=[2.0, 2.01])
    v = verdicts_conservation({"diagnostics.csv": grows}, None)
    assert v["lp2_drift"] is False and v["lp2_nonincreasing"] is False
    zero = _diag([0, 1], [0, 0], [0, 0], l2=[0.0, 0.0])
    assert set(verdicts_conservation({"diagnostics.csv": zero}, None).values()) == {"skip"}


def test_compose_identity_and_shift():
    g = GridSpec(64, 64)
    f = sample_analytic(g, lambda x, y: np.sin(x) * np.cos(y))
    X1, X2 = g.mesh()
    assert np.array_equal(compose(f, np.stack([X1, X2], axis=-1)).values, f.values)
    shifted = compose(f, np.stack([X1 + 2 * g.hx, X2], axis=-1))
    assert np.allclose(shifted.values, np.roll(f.values, -2, axis=1), atol=1e-14)


def test_composition_identity_ratio():
    cfg = ExperimentConfig("composition", grid=64, centers_per_scale=4, pair_budget=2000)
    res = scenario_composition(cfg, zoo=[MapZooEntry("identity", "identity", {}, 1.0)])
    for r in res.tables["ratios.csv"].records():
        # |f o id| = |f| and star = 1
        assert r["R"] == pytest.approx(1 / math.log(2), rel=1e-14)
        assert r["lp_rel"] == 0.0
    with pytest.raises(ValueError, match="nonempty"):
        scenario_composition(cfg, zoo=[])


def test_lbmo_example_needs_fine_grid():
    with pytest.raises(ValueError, match="1024"):
        run_scenario(ExperimentConfig("lbmo-example", grid=512))


def test_lbmo_example_constant_field(tmp_path):
    cfg = ExperimentConfig("lbmo-example", field="constant", centers_per_scale=2, out_dir=str(tmp_path))
    res = run_scenario(cfg)
    assert res.verdicts == {"sup_unbounded": True, "lbmo_stable": True}
    assert res.tables["ladder.csv"].column("lbmo") == [0.0, 0.0, 0.0]


def test_growth_zero_data_skips(tmp_path):
    cfg = ExperimentConfig("growth", grid=64, dt=1e-2, T=0.1, diag_every=5, init="zero",
                           ll_budget=1000, out_dir=str(tmp_path))
    res = run_scenario(cfg)
    assert res.verdicts == {"envelope": "skip"} and res.passed


def test_growth_stationary_flat():
    cfg = ExperimentConfig("growth", grid=64, dt=1e-2, T=0.5, diag_every=10, init="taylor-green",
                           centers_per_scale=4, ll_budget=1000)
    res = run_scenario(cfg)
    assert abs(res.summary["b"]) <= 1e-3
    assert res.verdicts == {"envelope": True}


def test_outputs_and_report(tmp_path):
    cfg = ExperimentConfig("conservation", grid=64, dt=1e-2, T=0.2, diag_every=5, snapshot_every=10,
                           ll_budget=1000, out_dir=str(tmp_path / "run"))
    res = run_scenario(cfg)
    out = write_outputs(res, cfg)
    assert {p.name for p in out.iterdir()} == {"run.json", "report.json", "diagnostics.csv", "frames"}
    rep = json.loads((out / "report.json").read_text())
    again = recompute_report(out)
    rep.pop("timestamp"), again.pop("timestamp")
    assert rep == again and rep["passed"]
    times, frames = load_frames(out)
    assert times == pytest.approx([0.0, 0.1, 0.2]) and len(frames) == 3
    assert np.array_equal(frames[0].values, res.frames["0000.f2d"][1].values)


def test_load_frames_without_snapshots(tmp_path):
    cfg = ExperimentConfig("kernel-oracle", grid=32, out_dir=str(tmp_path))
    write_outputs(run_scenario(cfg), cfg)
    with pytest.raises(ValueError, match="no vorticity frames"):
        load_frames(tmp_path)


def test_flow_modulus_small():
    cfg = ExperimentConfig("flow-modulus", grid=64, T=0.5, times=[0.0, 0.5], pair_budget=2000,
                           ll_budget=1000)
    res = run_scenario(cfg)
    assert set(res.verdicts) == {f"ratio_ok[{k}]" for k in ("rotation", "shear", "taylor-green", "solver")}
    assert res.passed
    recs = res.tables["flow.csv"].records()
    assert all(r["star"] >= 1.0 for r in recs)
