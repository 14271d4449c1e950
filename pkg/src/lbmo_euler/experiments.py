"""Reproducible verification scenarios.

Each scenario maps an :class:`ExperimentConfig` to a :class:`ScenarioResult`
holding CSV tables and verdicts.  Verdicts are computed by functions that
read the tables only, so ``report`` can recompute them from the files on
disk.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .biot_savart import (
    SpectralWorkspace,
    energy_spectral,
    enstrophy_weighted,
    upsample,
    velocity_from_vorticity_direct,
    velocity_from_vorticity_torus,
    velocity_residuals,
)
from .f2d import load_scalar, save_scalar
from .fields import GridSpec, ScalarField2D, interp_bilinear, lbmo_example, mollify, sample_analytic, sample_vector
from .flow import VelocitySeries, check_flow_modulus, star_modulus
from .initial import lbmo_bumps, random_smooth, taylor_green
from .mapzoo import torus_zoo
from .norms import lbmo_estimate, make_ball_family, max_j
from .solver import DIAG_COLUMNS, NumericalAbort, SolverConfig, run, velocity_of, write_diagnostics_csv

SCENARIOS = ("lbmo-example", "composition", "flow-modulus", "growth", "conservation", "kernel-oracle")

DEFAULTS = {
    "lbmo-example": {"grid": 1024},
    "composition": {"grid": 256},
    "flow-modulus": {"grid": 128, "dt": 1e-2, "T": 2.0},
    "growth": {"grid": 256, "dt": 4e-3, "T": 2.0, "diag_every": 25, "mollify_n": 16, "init": "lbmo-bumps"},
    "conservation": {"grid": 256, "dt": 2.5e-3, "T": 1.0, "diag_every": 40, "init": "random-smooth"},
    "kernel-oracle": {"grid": 128},
}


class InternalError(RuntimeError):
    """A computed quantity violates a mathematical invariant."""


@dataclass
class ExperimentConfig:
    scenario: str
    name: str = ""
    seed: int = 0
    out_dir: str = ""
    grid: int | None = None
    dt: float | None = None
    T: float | None = None
    j_max: int | None = None
    centers_per_scale: int = 16
    pair_budget: int = 20000
    ll_budget: int = 4000
    diag_every: int | None = None
    mollify_n: int | None = None
    init: str | None = None
    field: str = "example"
    times: list | None = None
    ratio_threshold: float = 3.0
    lp_tol: float = 1e-2
    residual_tol: float = 0.2
    flow_ratio_max: float = 1.1
    lbmo_rel_tol: float = 0.1
    snapshot_every: int | None = None
    velocity_refine: int = 4

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; known: {', '.join(SCENARIOS)}")
        for k, v in DEFAULTS[self.scenario].items():
            if getattr(self, k) is None:
                setattr(self, k, v)
        if not self.name:
            self.name = f"{self.scenario}-seed{self.seed}"
        if not self.out_dir:
            self.out_dir = str(Path("runs") / self.name)

    @classmethod
    def from_mapping(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = sorted(set(d) - known)
        if extra:
            raise ValueError(f"unknown config keys: {', '.join(extra)}")
        if "scenario" not in d:
            raise ValueError("config must name a scenario")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> ExperimentConfig:
    """TOML (``.toml``) or JSON config file."""
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix == ".toml":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        d = tomllib.loads(raw.decode("utf-8"))
    else:
        d = json.loads(raw)
    return ExperimentConfig.from_mapping(d)


# ---------------------------------------------------------------- tables


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.header.index(name)
        return [r[k] for r in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.header, r)) for r in self.rows]


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _parse(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def write_table(path, table: Table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        for r in table.rows:
            w.writerow([_cell(v) for v in r])


def read_table(path) -> Table:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return Table(rows[0], [[_parse(v) for v in r] for r in rows[1:]])


@dataclass
class ScenarioResult:
    scenario: str
    tables: dict  # file name -> Table
    verdicts: dict  # name -> True / False / "skip"
    summary: dict = field(default_factory=dict)
    frames: dict = field(default_factory=dict)  # file name -> (t, ScalarField2D)

    @property
    def passed(self) -> bool:
        return all(v is True or v == "skip" for v in self.verdicts.values())


# ---------------------------------------------------------------- verdicts


def verdicts_lbmo_example(t: dict, cfg: ExperimentConfig) -> dict:
    tab = t["ladder.csv"]
    linf, lb = tab.column("linf"), tab.column("lbmo")
    unbounded = all(b > a for a, b in zip(linf, linf[1:]))
    a, b = lb[-2], lb[-1]
    stable = (a == b == 0.0) or abs(b - a) <= cfg.lbmo_rel_tol * max(abs(a), abs(b))
    expect = cfg.field == "example"
    return {"sup_unbounded": unbounded == expect, "lbmo_stable": stable}


def verdicts_composition(t: dict, cfg: ExperimentConfig) -> dict:
    recs = t["ratios.csv"].records()
    out = {"lp_match": all(r["lp_rel"] <= cfg.lp_tol for r in recs)}
    fam = [r for r in recs if r["family"] in ("sine_shear", "twist")]
    stars = [r["star"] for r in fam]
    out["star_decade"] = bool(stars) and max(stars) >= 10.0 * min(stars)
    for f in sorted({r["f"] for r in fam}):
        R = np.array([r["R"] for r in fam if r["f"] == f])
        out[f"ratio_bounded[{f}]"] = bool(R.max() <= cfg.ratio_threshold * np.median(R))
    return out


def verdicts_flow_modulus(t: dict, cfg: ExperimentConfig) -> dict:
    recs = t["flow.csv"].records()
    out = {}
    for f in sorted({r["flow"] for r in recs}):
        out[f"ratio_ok[{f}]"] = all(r["ratio"] <= cfg.flow_ratio_max for r in recs if r["flow"] == f)
    return out


def growth_fit(tab: Table):
    """Least-squares ``a + b t`` for ``ln(lbmo + ll)``; ``None`` for degenerate data."""
    tt = np.array(tab.column("t"), dtype=float)
    s = np.array(tab.column("lbmo"), dtype=float) + np.array(tab.column("ll"), dtype=float)
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        return None
    y = np.log(s)
    A = np.stack([np.ones_like(tt), tt], axis=1)
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(a), float(b), tt, y, y - (a + b * tt)


def verdicts_growth(t: dict, cfg: ExperimentConfig) -> dict:
    fit = growth_fit(t["diagnostics.csv"])
    if fit is None:
        return {"envelope": "skip"}
    return {"envelope": bool(np.max(fit[4]) <= cfg.residual_tol)}


def verdicts_conservation(t: dict, cfg: ExperimentConfig) -> dict:
    tab = t["diagnostics.csv"]
    tt = np.array(tab.column("t"), dtype=float)
    l2 = np.array(tab.column("lp2"), dtype=float)
    mean = np.array(tab.column("mean"), dtype=float)
    ref = l2[0]
    if ref == 0:
        return {"lp2_drift": "skip", "mean_exact": "skip", "lp2_nonincreasing": "skip"}
    return {
        "lp2_drift": bool(np.max(np.abs(l2 - ref)) / ref <= 1e-4),
        "mean_exact": bool(np.max(np.abs(mean - mean[0])) <= 1e-12),
        "lp2_nonincreasing": bool(np.all(np.diff(l2) <= 1e-4 * ref * np.diff(tt))),
    }


def verdicts_kernel_oracle(t: dict, cfg: ExperimentConfig) -> dict:
    return {f"{r['case']}:{r['metric']}": r["value"] <= r["tol"] for r in t["conformance.csv"].records()}


VERDICTS = {
    "lbmo-example": verdicts_lbmo_example,
    "composition": verdicts_composition,
    "flow-modulus": verdicts_flow_modulus,
    "growth": verdicts_growth,
    "conservation": verdicts_conservation,
    "kernel-oracle": verdicts_kernel_oracle,
}


def _result(cfg: ExperimentConfig, tables: dict, summary: dict | None = None, frames=None) -> ScenarioResult:
    return ScenarioResult(cfg.scenario, tables, VERDICTS[cfg.scenario](tables, cfg), summary or {}, frames or {})


# ---------------------------------------------------------------- scenarios


LADDER_WINDOW = (-2.0, 2.0)


def ladder_field(kind: str, spec: GridSpec) -> ScalarField2D:
    if kind == "example":
        return sample_analytic(spec, lambda x, y: lbmo_example(x, y, spec.h / 2))
    if kind == "sign":
        return sample_analytic(spec, lambda x, y: np.sign(x - 0.3))
    if kind == "constant":
        return sample_analytic(spec, lambda x, y: np.ones_like(x))
    raise ValueError(f"unknown ladder field {kind!r}; known: example, sign, constant")


def scenario_lbmo_example(cfg: ExperimentConfig) -> ScenarioResult:
    """L-infinity, BMO and LBMO estimates of one field over three refinements."""
    if cfg.grid < 1024:
        raise ValueError(f"lbmo-example needs a window grid of at least 1024^2, got {cfg.grid}")
    lo, hi = LADDER_WINDOW
    j0 = cfg.j_max if cfg.j_max is not None else max_j(GridSpec.window(cfg.grid, lo, hi))
    tab = Table(["n", "j_max", "h", "linf", "bmo", "lbmo2", "lbmo"])
    for k, m in enumerate((1, 2, 4)):
        spec = GridSpec.window(cfg.grid * m, lo, hi)
        fam = make_ball_family(spec, j0 + k, cfg.centers_per_scale, cfg.seed)
        rep = lbmo_estimate(ladder_field(cfg.field, spec), fam, ps=(math.inf,))
        tab.rows.append([spec.nx, j0 + k, spec.h, rep.lp["inf"], rep.bmo, rep.lbmo_second_term, rep.lbmo])
    return _result(cfg, {"ladder.csv": tab})


def composition_functions(spec: GridSpec, seed: int) -> dict:
    c = (spec.ox + spec.lx / 2, spec.oy + spec.ly / 2)
    return {
        "lbmo-bump": sample_analytic(spec, lambda x, y: lbmo_example(x, y, spec.h / 2, center=c)),
        "sign": sample_analytic(spec, lambda x, y: np.sign(np.sin(x))),
        "smooth": random_smooth(spec, seed),
    }


def compose(f: ScalarField2D, forward: np.ndarray) -> ScalarField2D:
    """Nodal samples of ``f o psi`` given ``psi`` at the nodes, by interpolation into ``f``."""
    return f.with_values(interp_bilinear(f, forward.reshape(-1, 2)).reshape(f.grid.shape))


def scenario_composition(cfg: ExperimentConfig, zoo=None, funcs=None) -> ScenarioResult:
    """Ratio ``|f o psi| / (ln(1 + star) |f|)`` over a map zoo and test functions."""
    spec = GridSpec(cfg.grid, cfg.grid)
    zoo = torus_zoo() if zoo is None else zoo
    funcs = composition_functions(spec, cfg.seed) if funcs is None else funcs
    if not zoo or not funcs:
        raise ValueError("composition needs a nonempty map zoo and function list")
    fam = make_ball_family(spec, cfg.j_max if cfg.j_max is not None else max_j(spec),
                           cfg.centers_per_scale, cfg.seed)
    base = {name: lbmo_estimate(f, fam, ps=(2.0,)) for name, f in funcs.items()}
    tab = Table(["f", "map", "family", "star", "lp2_f", "lp2_fpsi", "lp_rel",
                 "lbmo_f", "lbmo_fpsi", "R"])
    for entry in zoo:
        smap = entry.sample(spec)
        star = star_modulus(smap, cfg.pair_budget, cfg.seed).star
        if not star >= 1.0:
            raise InternalError(f"modulus estimate {star!r} < 1 for map {entry.name}")
        for name, f in funcs.items():
            rf = base[name]
            rg = lbmo_estimate(compose(f, smap.forward), fam, ps=(2.0,))
            nf = rf.lp["2"] + rf.lbmo
            ng = rg.lp["2"] + rg.lbmo
            lp_rel = abs(rg.lp["2"] - rf.lp["2"]) / rf.lp["2"]
            R = ng / (math.log1p(star) * nf)
            tab.rows.append([name, entry.name, entry.family, star, rf.lp["2"], rg.lp["2"], lp_rel,
                             rf.lbmo, rg.lbmo, R])
    return _result(cfg, {"ratios.csv": tab})


def _window_velocity(spec: GridSpec, fn) -> VelocitySeries:
    return VelocitySeries.stationary(sample_vector(spec, fn))


def flow_cases(cfg: ExperimentConfig) -> list:
    """(name, velocity series, seed lattice, dt) for each flow checked."""
    n = cfg.grid
    torus = GridSpec(n, n)
    rot = _window_velocity(GridSpec.window(n, -2.0, 2.0), lambda x, y: (-y, x))
    shear = _window_velocity(GridSpec.window(n, -4.0, 4.0), lambda x, y: (y, np.zeros_like(x)))
    fine = GridSpec(n * cfg.velocity_refine, n * cfg.velocity_refine)
    tg = _window_velocity(fine, lambda x, y: (-np.sin(x) * np.cos(y), np.cos(x) * np.sin(y)))
    # linear fields: a coarse seed lattice already resolves their flow maps exactly
    small = GridSpec.window(max(n // 4, 16), -1.0, 1.0)
    cases = [
        ("rotation", rot, small, min(cfg.dt, 5e-3)),
        ("shear", shear, small, min(cfg.dt, 2.5e-3)),
        ("taylor-green", tg, torus, cfg.dt),
    ]
    return cases


def solver_velocity(cfg: ExperimentConfig) -> VelocitySeries:
    """Velocity frames every 0.1 time units of a solver run from random smooth data,
    resampled ``velocity_refine`` times finer for the bilinear integrator."""
    spec = GridSpec(cfg.grid, cfg.grid)
    w0 = random_smooth(spec, cfg.seed)
    every = max(1, round(0.1 / cfg.dt))
    scfg = SolverConfig(spec, cfg.dt, cfg.T, diag_every=every, snapshot_every=every,
                        ll_budget=1000, seed=cfg.seed)
    rec = run(w0, scfg)
    ws = SpectralWorkspace(spec)
    steps = sorted(rec.snapshots)
    frames = [upsample(velocity_of(rec.snapshots[k], ws), cfg.velocity_refine) for k in steps]
    return VelocitySeries([k * cfg.dt for k in steps], frames)


def scenario_flow_modulus(cfg: ExperimentConfig) -> ScenarioResult:
    """Flow-map modulus against ``exp(int ll)`` for analytic and solver velocities."""
    times = cfg.times or [cfg.T * k / 4 for k in range(5)]
    tab = Table(["flow", "t", "star", "bound", "ratio", "warning"])
    cases = flow_cases(cfg)
    cases.append(("solver", solver_velocity(cfg), GridSpec(cfg.grid, cfg.grid), cfg.dt))
    for name, vel, seeds, dt in cases:
        for row in check_flow_modulus(vel, seeds, dt, times, cfg.pair_budget, cfg.ll_budget, cfg.seed):
            tab.rows.append([name, row.t, row.star, row.bound, row.ratio, row.warning])
    warnings = sum(1 for r in tab.records() if r["warning"])
    return _result(cfg, {"flow.csv": tab}, {"estimator_gap_warnings": warnings})


def growth_initial(cfg: ExperimentConfig, spec: GridSpec) -> ScalarField2D:
    kind = cfg.init
    if kind == "lbmo-bumps":
        w = lbmo_bumps(spec)
        if cfg.mollify_n:
            w = mollify(w, cfg.mollify_n)
        return w.with_values(w.values - w.values.mean())
    if kind == "taylor-green":
        return taylor_green(spec)
    if kind == "random-smooth":
        return random_smooth(spec, cfg.seed, kmax=8)
    if kind == "zero":
        return ScalarField2D(spec, np.zeros(spec.shape))
    raise ValueError(f"unknown initial data {kind!r}; known: lbmo-bumps, taylor-green, random-smooth, zero")


def _solver_scenario(cfg: ExperimentConfig, with_family: bool) -> tuple:
    spec = GridSpec(cfg.grid, cfg.grid)
    w0 = growth_initial(cfg, spec)
    scfg = SolverConfig(spec, cfg.dt, cfg.T, diag_every=cfg.diag_every, ll_budget=cfg.ll_budget,
                        seed=cfg.seed, snapshot_every=cfg.snapshot_every)
    fam = None
    if with_family:
        fam = make_ball_family(spec, cfg.j_max if cfg.j_max is not None else max_j(spec),
                               cfg.centers_per_scale, cfg.seed)
    return run(w0, scfg, fam), scfg


def _frames(rec) -> dict:
    dt = rec.config.dt
    return {f"{k:04d}.f2d": (k * dt, fld) for k, fld in sorted(rec.snapshots.items())}


def _diag_table(rows: list[dict]) -> Table:
    return Table(list(DIAG_COLUMNS), [[r[c] for c in DIAG_COLUMNS] for r in rows])


def scenario_growth(cfg: ExperimentConfig) -> ScenarioResult:
    """Solver run from mollified LBMO-type data; affine fit of ``ln(lbmo + ll)``."""
    try:
        rec, _ = _solver_scenario(cfg, with_family=True)
    except NumericalAbort as err:
        if err.record is not None:
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_diagnostics_csv(out / "diagnostics.csv", err.record.diagnostics)
        raise
    diag = _diag_table(rec.diagnostics)
    tables = {"diagnostics.csv": diag}
    fit = growth_fit(diag)
    summary = {}
    if fit is not None:
        a, b, tt, y, res = fit
        tables["fit.csv"] = Table(["t", "log_sum", "fit", "residual"],
                                  [[t_, y_, y_ - r_, r_] for t_, y_, r_ in zip(tt, y, res)])
        summary = {"a": a, "b": b, "max_residual": float(np.max(res))}
    return _result(cfg, tables, summary, _frames(rec))


def scenario_conservation(cfg: ExperimentConfig) -> ScenarioResult:
    """Drift of L2, mean and energy for a generic smooth run."""
    rec, _ = _solver_scenario(cfg, with_family=False)
    return _result(cfg, {"diagnostics.csv": _diag_table(rec.diagnostics)}, frames=_frames(rec))


def kernel_conformance(n: int) -> Table:
    """Analytic and cross-oracle checks of the Biot-Savart inversions."""
    tab = Table(["case", "grid", "metric", "value", "tol"])
    spec = GridSpec(n, n)
    ws = SpectralWorkspace(spec)

    def rel(u, v1, v2):
        scale = max(float(np.max(np.abs(v1))), float(np.max(np.abs(v2))), 1e-300)
        return max(float(np.max(np.abs(u.u1 - v1))), float(np.max(np.abs(u.u2 - v2)))) / scale

    zero = ScalarField2D(spec, np.zeros(spec.shape))
    u = velocity_from_vorticity_torus(zero, ws)
    tab.rows.append(["zero", n, "max_abs_u", max(float(np.max(np.abs(u.u1))), float(np.max(np.abs(u.u2)))), 0.0])
    X1, X2 = spec.mesh()
    cos = sample_analytic(spec, lambda x, y: np.cos(x))
    tab.rows.append(["cos", n, "rel_err", rel(velocity_from_vorticity_torus(cos, ws), 0 * X1, np.sin(X1)), 1e-10])
    tg = taylor_green(spec)
    u = velocity_from_vorticity_torus(tg, ws)
    tab.rows.append(["taylor-green", n, "rel_err",
                     rel(u, -np.sin(X1) * np.cos(X2), np.cos(X1) * np.sin(X2)), 1e-10])
    w = random_smooth(spec, 0, kmax=12)
    u = velocity_from_vorticity_torus(w, ws)
    div, curl = velocity_residuals(u, w, ws)
    tab.rows.append(["random", n, "div_rel", div, 1e-10])
    tab.rows.append(["random", n, "curl_rel", curl, 1e-10])
    e1, e2 = energy_spectral(u, ws), enstrophy_weighted(w, ws)
    tab.rows.append(["random", n, "energy_identity_rel", abs(e1 - e2) / e2, 1e-10])

    # direct quadrature: far field of a radial bump and agreement with the torus inversion
    win = GridSpec.window(min(n, 256), -4.0, 4.0)
    a = 0.5
    bump = sample_analytic(win, lambda x, y: np.where(x * x + y * y < a * a,
                                                      np.cos(np.pi * np.hypot(x, y) / (2 * a)) ** 2, 0.0))
    ud = velocity_from_vorticity_direct(bump)
    mass = float(np.sum(bump.values)) * win.cell_area
    Y1, Y2 = win.mesh()
    rho = np.hypot(Y1, Y2)
    ring = np.abs(rho - 3 * a) < win.h
    speed = np.hypot(ud.u1, ud.u2)[ring]
    far = float(np.max(np.abs(speed - mass / (2 * np.pi * rho[ring])) / (mass / (2 * np.pi * rho[ring]))))
    tab.rows.append(["direct-far-field", win.nx, "rel_err", far, 0.02])
    per = GridSpec(win.nx, win.ny, win.lx, win.ly, win.ox, win.oy, periodic=True)
    wp = bump.values - bump.values.mean()
    ut = velocity_from_vorticity_torus(ScalarField2D(per, wp))
    inside = rho < a
    ref = float(np.max(np.hypot(ud.u1, ud.u2)[inside]))
    agree = float(np.max(np.hypot(ud.u1 - ut.u1, ud.u2 - ut.u2)[inside])) / ref
    tab.rows.append(["direct-vs-torus", win.nx, "rel_err_in_support", agree, 0.05])
    return tab


def scenario_kernel_oracle(cfg: ExperimentConfig) -> ScenarioResult:
    return _result(cfg, {"conformance.csv": kernel_conformance(cfg.grid)})


RUNNERS = {
    "lbmo-example": scenario_lbmo_example,
    "composition": scenario_composition,
    "flow-modulus": scenario_flow_modulus,
    "growth": scenario_growth,
    "conservation": scenario_conservation,
    "kernel-oracle": scenario_kernel_oracle,
}


def run_scenario(cfg: ExperimentConfig) -> ScenarioResult:
    return RUNNERS[cfg.scenario](cfg)


# ---------------------------------------------------------------- outputs


def provenance() -> dict:
    return {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def report_dict(cfg: ExperimentConfig, verdicts: dict, summary: dict, tables: list[str]) -> dict:
    return {
        "name": cfg.name,
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "passed": all(v is True or v == "skip" for v in verdicts.values()),
        "verdicts": verdicts,
        "summary": summary,
        "tables": sorted(tables),
        "timestamp": provenance()["timestamp"],
    }


def write_outputs(res: ScenarioResult, cfg: ExperimentConfig) -> Path:
    """``run.json``, one CSV per table and ``report.json`` under ``cfg.out_dir``."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": cfg.to_dict(), "provenance": provenance()}
    if res.frames:
        (out / "frames").mkdir(exist_ok=True)
        for name, (_, fld) in res.frames.items():
            save_scalar(out / "frames" / name, fld)
        meta["frames"] = {name: t for name, (t, _) in res.frames.items()}
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for name, tab in res.tables.items():
        write_table(out / name, tab)
    rep = report_dict(cfg, res.verdicts, res.summary, list(res.tables))
    (out / "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    return out


def recompute_report(out_dir) -> dict:
    """Re-derive verdicts from ``run.json`` and the CSVs in ``out_dir``."""
    out = Path(out_dir)
    meta = json.loads((out / "run.json").read_text())
    cfg = ExperimentConfig.from_mapping(meta["config"])
    tables = {p.name: read_table(p) for p in sorted(out.glob("*.csv"))}
    verdicts = VERDICTS[cfg.scenario](tables, cfg)
    summary = {}
    if cfg.scenario == "growth":
        fit = growth_fit(tables["diagnostics.csv"])
        if fit is not None:
            summary = {"a": fit[0], "b": fit[1], "max_residual": float(np.max(fit[4]))}
    return report_dict(cfg, verdicts, summary, list(tables))


def load_frames(out_dir) -> tuple[list[float], list[ScalarField2D]]:
    """Vorticity frames saved by a solver scenario, in time order."""
    out = Path(out_dir)
    meta = json.loads((out / "run.json").read_text())
    frames = meta.get("frames") or {}
    if not frames:
        raise ValueError(f"{out} holds no vorticity frames (set snapshot_every in the config)")
    names = sorted(frames, key=lambda k: frames[k])
    return [float(frames[k]) for k in names], [load_scalar(out / "frames" / k) for k in names]
