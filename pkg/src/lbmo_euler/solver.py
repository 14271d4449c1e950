"""Pseudo-spectral RK4 integration of vorticity transport on the torus.

The state is the physical vorticity array.  The right-hand side is
``-u . grad(omega)`` with ``u`` from the spectral Biot-Savart inversion,
gradients taken spectrally, the product formed on the grid and (optionally)
truncated by the 2/3 rule.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .biot_savart import SpectralWorkspace, _check_mean_free
from .f2d import load_scalar, save_scalar
from .fields import GridSpec, ScalarField2D, VectorField2D, lp_norm, mollify
from .norms import BallFamily, lbmo_estimate, ll_norm_estimate

CFL_SAFETY = 0.5
DIAG_COLUMNS = ["t", "lp2", "lpP", "lpInf", "bmo", "lbmo2", "lbmo", "ll", "energy", "mean"]


class NumericalAbort(RuntimeError):
    """Non-finite state; carries the failing step, the last finite snapshot
    and the partial run record."""

    def __init__(self, msg: str, step: int, last_good: ScalarField2D | None = None, record=None):
        super().__init__(msg)
        self.step = step
        self.last_good = last_good
        self.record = record


class SolverCFLError(ValueError):
    pass


@dataclass
class SolverConfig:
    spec: GridSpec
    dt: float
    T: float
    dealias: bool = True
    diag_every: int = 10
    mollify_n: int | None = None
    p: float = 1.5
    snapshot_every: int | None = None
    ll_budget: int = 4000
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.T < 0:
            raise ValueError("dt must be positive and T nonnegative")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * max(self.T, 1.0):
            raise ValueError(f"T/dt must be an integer, got {self.T / self.dt!r}")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = self.spec.to_header()
        return d


def _velocity(w_hat: np.ndarray, ws: SpectralWorkspace):
    u1h, u2h = ws.velocity_hat(w_hat)
    return ws.ifft(u1h), ws.ifft(u2h)


def _rhs_array(w: np.ndarray, ws: SpectralWorkspace, dealias: bool):
    wh = ws.fft(w)
    u1, u2 = _velocity(wh, ws)
    wx = ws.ifft(ws.d1 * wh)
    wy = ws.ifft(ws.d2 * wh)
    ph = ws.fft(u1 * wx + u2 * wy)
    if dealias:
        ph = ph * ws.dealias_mask
    # the product's mean mode vanishes analytically for divergence-free u
    ph[0, 0] = 0.0
    return -ws.ifft(ph), max(float(np.max(np.abs(u1))), float(np.max(np.abs(u2))))


def rhs(omega: ScalarField2D, ws: SpectralWorkspace, dealias: bool = True) -> ScalarField2D:
    """``-u . grad(omega)`` as a field."""
    _check_mean_free(omega)
    out, _ = _rhs_array(omega.values, ws, dealias)
    return ScalarField2D(omega.grid, out)


def max_stable_dt(umax: float, spec: GridSpec) -> float:
    return math.inf if umax == 0 else CFL_SAFETY * spec.h / umax


def _rk4(w: np.ndarray, ws: SpectralWorkspace, dt: float, dealias: bool, step: int = 0):
    k1, umax = _rhs_array(w, ws, dealias)
    if umax > 0 and abs(dt) > max_stable_dt(umax, ws.spec) * (1 + 1e-12):
        raise SolverCFLError(
            f"CFL violated at step {step}: dt={abs(dt):g} > {max_stable_dt(umax, ws.spec):.6g}"
        )
    k2, _ = _rhs_array(w + 0.5 * dt * k1, ws, dealias)
    k3, _ = _rhs_array(w + 0.5 * dt * k2, ws, dealias)
    k4, _ = _rhs_array(w + dt * k3, ws, dealias)
    return w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(omega: ScalarField2D, ws: SpectralWorkspace, cfg: SolverConfig, dt: float | None = None) -> ScalarField2D:
    """One classical RK4 step (``dt`` defaults to ``cfg.dt``; negative runs backward)."""
    return ScalarField2D(omega.grid, _rk4(omega.values, ws, cfg.dt if dt is None else dt, cfg.dealias))


def velocity_of(omega: ScalarField2D, ws: SpectralWorkspace) -> VectorField2D:
    u1, u2 = _velocity(ws.fft(omega.values), ws)
    return VectorField2D(omega.grid, u1, u2)


def kinetic_energy(omega: ScalarField2D, ws: SpectralWorkspace) -> float:
    """``0.5 * int |u|^2`` by quadrature of the spectral velocity."""
    u = velocity_of(omega, ws)
    return 0.5 * float(np.sum(u.u1**2 + u.u2**2)) * omega.grid.cell_area


@dataclass
class RunRecord:
    config: SolverConfig
    times: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)  # step -> ScalarField2D
    diagnostics: list = field(default_factory=list)  # dicts keyed by DIAG_COLUMNS
    provenance: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.diagnostics], dtype=np.float64)

    def snapshot_times(self) -> list[float]:
        return [k * self.config.dt for k in sorted(self.snapshots)]


def diagnostics_row(t: float, omega: ScalarField2D, ws: SpectralWorkspace, cfg: SolverConfig,
                    fam: BallFamily | None) -> dict:
    row = {
        "t": t,
        "lp2": lp_norm(omega, 2),
        "lpP": lp_norm(omega, cfg.p),
        "lpInf": lp_norm(omega, math.inf),
    }
    if fam is not None:
        rep = lbmo_estimate(omega, fam, ps=())
        row.update(bmo=rep.bmo, lbmo2=rep.lbmo_second_term, lbmo=rep.lbmo)
    else:
        row.update(bmo=math.nan, lbmo2=math.nan, lbmo=math.nan)
    row["ll"] = ll_norm_estimate(velocity_of(omega, ws), cfg.ll_budget, cfg.seed)
    row["energy"] = kinetic_energy(omega, ws)
    row["mean"] = omega.mean()
    return row


def run(omega0: ScalarField2D, cfg: SolverConfig, fam: BallFamily | None = None,
        ws: SpectralWorkspace | None = None) -> RunRecord:
    """Integrate to ``cfg.T`` recording diagnostics every ``cfg.diag_every`` steps."""
    if omega0.grid != cfg.spec:
        raise ValueError("initial data grid differs from the solver grid")
    ws = ws or SpectralWorkspace(cfg.spec)
    if cfg.mollify_n:
        omega0 = mollify(omega0, cfg.mollify_n)
    _check_mean_free(omega0)
    rec = RunRecord(cfg)
    snap_every = cfg.snapshot_every
    w = np.array(omega0.values)
    last_good = omega0
    n = cfg.n_steps
    for k in range(n + 1):
        cur = last_good
        if k % cfg.diag_every == 0 or k == n:
            t = k * cfg.dt
            rec.times.append(t)
            rec.diagnostics.append(diagnostics_row(t, cur, ws, cfg, fam))
        if snap_every and (k % snap_every == 0 or k == n):
            rec.snapshots[k] = cur
        if k == n:
            break
        w = _rk4(w, ws, cfg.dt, cfg.dealias, step=k)
        if not np.all(np.isfinite(w)):
            raise NumericalAbort(f"non-finite vorticity after step {k + 1}", k + 1, last_good, rec)
        last_good = ScalarField2D(cfg.spec, w)
    return rec


def conservation_report(rec: RunRecord) -> dict:
    """Max relative drift over time of L2, L^p, mean and kinetic energy.

    Drift of the mean is measured relative to the initial L2 norm; a zero
    reference gives 0 (``0/0`` guard).
    """
    if len(rec.diagnostics) < 2:
        raise ValueError("need at least two diagnostic rows")
    out = {}
    ref_scale = rec.diagnostics[0]["lp2"]
    for name, col in (("lp2", "lp2"), ("lpP", "lpP"), ("mean", "mean"), ("energy", "energy")):
        v = rec.column(col)
        ref = abs(v[0]) if name != "mean" else ref_scale
        dev = float(np.max(np.abs(v - v[0])))
        out[name] = 0.0 if ref == 0 else dev / ref
    return out


# ---------------------------------------------------------------- persistence


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def write_diagnostics_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAG_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in DIAG_COLUMNS])


def read_diagnostics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def persist(rec: RunRecord, out_dir, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    meta = {"config": rec.config.to_dict(), "provenance": rec.provenance, **(extra or {})}
    meta["frames"] = {f"{k:04d}.f2d": k * rec.config.dt for k in sorted(rec.snapshots)}
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    write_diagnostics_csv(out / "diagnostics.csv", rec.diagnostics)
    for k, fld in sorted(rec.snapshots.items()):
        save_scalar(out / "frames" / f"{k:04d}.f2d", fld)
    return out


def load_run(run_dir) -> RunRecord:
    d = Path(run_dir)
    meta = json.loads((d / "run.json").read_text())
    c = dict(meta["config"])
    c["spec"] = GridSpec(**c["spec"])
    cfg = SolverConfig(**c)
    rec = RunRecord(cfg, provenance=meta.get("provenance", {}))
    rec.diagnostics = read_diagnostics_csv(d / "diagnostics.csv")
    rec.times = [row["t"] for row in rec.diagnostics]
    for name in sorted(meta.get("frames", {})):
        rec.snapshots[int(name.split(".")[0])] = load_scalar(d / "frames" / name)
    return rec
