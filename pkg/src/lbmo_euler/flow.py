"""Flow maps of velocity fields and their logarithmic distortion modulus.

The modulus of a homeomorphism is ``sup_{x != y} phi(|psi(x)-psi(y)|, |x-y|)``
with

    phi(r, s) = max((1+|ln s|)/(1+|ln r|), (1+|ln r|)/(1+|ln s|))   if (1-s)(1-r) >= 0
              = (1+|ln s|)(1+|ln r|)                                 otherwise.

Maps are sampled on a lattice of seed points; distances are Euclidean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .f2d import load_records, write_record
from .fields import GridSpec, VectorField2D, interp_bilinear
from .norms import ll_norm_estimate
from .rng import stream

TOL_INV = {"analytic": 1e-10, "integrated": 1e-4}
TOL_JAC = {"analytic": 1e-6, "integrated": 1e-3}
FD_STEP = 1e-5


class FlowInvariantError(RuntimeError):
    pass


class CFLError(ValueError):
    pass


def _positive(name: str, *arrays) -> None:
    for a in arrays:
        if np.any(~(np.asarray(a) > 0)):
            raise ValueError(f"{name} needs strictly positive arguments")


def phi(r, s):
    """The two-branch distortion function; symmetric in its arguments."""
    _positive("phi", r, s)
    r = np.asarray(r, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    a = 1.0 + np.abs(np.log(r))
    b = 1.0 + np.abs(np.log(s))
    same_side = (1.0 - s) * (1.0 - r) >= 0
    out = np.where(same_side, np.maximum(a / b, b / a), a * b)
    return float(out) if out.ndim == 0 else out


def g_of(tau):
    """``ln(1 + ln tau)`` for tau >= 1, ``-ln(1 - ln tau)`` below 1."""
    _positive("g_of", tau)
    t = np.asarray(tau, dtype=np.float64)
    lt = np.log(t)
    out = np.where(t >= 1.0, np.log1p(np.maximum(lt, 0.0)), -np.log1p(-np.minimum(lt, 0.0)))
    return float(out) if out.ndim == 0 else out


def g_psi(r, star):
    """Radius of the ball around ``psi(x0)`` containing ``4 psi(B(x0, r))``."""
    _positive("g_psi", r)
    star_a = np.asarray(star, dtype=np.float64)
    if np.any(~(star_a >= 1.0)):
        raise ValueError("g_psi needs star >= 1")
    r = np.asarray(r, dtype=np.float64)
    big = 4.0 * np.exp(star_a) * r**star_a
    small = 4.0 * np.maximum(np.e * r ** (1.0 / star_a), np.exp(star_a) * r)
    out = np.where(r >= 1.0, big, small)
    return float(out) if out.ndim == 0 else out


def ss_ratio(r, star):
    """``|ln((1+|ln g_psi(r)|)/(1+|ln r|))| / (1 + ln(1+star))``; bounded by a universal constant."""
    g = g_psi(r, star)
    lhs = np.abs(np.log((1.0 + np.abs(np.log(g))) / (1.0 + np.abs(np.log(r)))))
    return lhs / (1.0 + np.log1p(star))


# ---------------------------------------------------------------- sampled maps


@dataclass
class SampledMap:
    grid: GridSpec
    forward: np.ndarray = field(repr=False)  # (ny, nx, 2)
    inverse: np.ndarray = field(repr=False)
    kind: str = "analytic"
    roundtrip_error: float = 0.0
    jacobian_error: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def seeds(self) -> np.ndarray:
        X1, X2 = self.grid.mesh()
        return np.stack([X1, X2], axis=-1)

    @property
    def tol_inv(self) -> float:
        return TOL_INV[self.kind]

    @property
    def tol_jac(self) -> float:
        return TOL_JAC[self.kind]

    def inverted(self) -> SampledMap:
        return SampledMap(
            self.grid, self.inverse, self.forward, self.kind,
            self.roundtrip_error, self.jacobian_error, dict(self.meta),
        )

    def validate(self) -> SampledMap:
        if not self.roundtrip_error <= self.tol_inv:
            raise FlowInvariantError(
                f"forward(inverse(x)) misses the identity by {self.roundtrip_error:.3e} "
                f"(> {self.tol_inv:g})"
            )
        if not self.jacobian_error <= self.tol_jac:
            raise FlowInvariantError(
                f"Jacobian determinant deviates from 1 by {self.jacobian_error:.3e} "
                f"(> {self.tol_jac:g})"
            )
        return self

    @classmethod
    def from_functions(cls, seeds: GridSpec, fwd: Callable, inv: Callable, **meta) -> SampledMap:
        """Sample an analytic map given vectorized ``fwd``/``inv`` on ``(..., 2)`` arrays."""
        X1, X2 = seeds.mesh()
        pts = np.stack([X1, X2], axis=-1)
        F = np.asarray(fwd(pts), dtype=np.float64)
        G = np.asarray(inv(pts), dtype=np.float64)
        rt = float(np.max(np.abs(np.asarray(fwd(G)) - pts)))
        jac = float(np.max(np.abs(jacobian_det_pointwise(fwd, pts) - 1.0)))
        return cls(seeds, F, G, "analytic", rt, jac, dict(meta)).validate()


def jacobian_det_pointwise(fwd: Callable, pts: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian determinant of a callable map at ``pts``."""
    e1 = np.array([step, 0.0])
    e2 = np.array([0.0, step])
    d1 = (np.asarray(fwd(pts + e1)) - np.asarray(fwd(pts - e1))) / (2 * step)
    d2 = (np.asarray(fwd(pts + e2)) - np.asarray(fwd(pts - e2))) / (2 * step)
    return d1[..., 0] * d2[..., 1] - d2[..., 0] * d1[..., 1]


def jacobian_det_lattice(F: np.ndarray, seeds: GridSpec) -> np.ndarray:
    """Fourth-order central differences on the lattice interior, shape ``(ny-4, nx-4)``."""
    dx = (-F[2:-2, 4:] + 8 * F[2:-2, 3:-1] - 8 * F[2:-2, 1:-3] + F[2:-2, :-4]) / (12 * seeds.hx)
    dy = (-F[4:, 2:-2] + 8 * F[3:-1, 2:-2] - 8 * F[1:-3, 2:-2] + F[:-4, 2:-2]) / (12 * seeds.hy)
    return dx[..., 0] * dy[..., 1] - dy[..., 0] * dx[..., 1]


# ---------------------------------------------------------------- modulus


@dataclass
class ModulusReport:
    star: float
    argmax_pair: tuple  # (x, y, psi(x), psi(y))
    pair_count: int

    def recompute(self) -> float:
        x, y, fx, fy = (np.asarray(v) for v in self.argmax_pair)
        return phi(float(np.hypot(*(fx - fy))), float(np.hypot(*(x - y))))


def seed_pairs(seeds: GridSpec, pair_budget: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat seed-index pairs stratified over dyadic lattice separations.

    Separation levels are ``1, 2, 4, ...`` lattice steps up to half the
    lattice; the direction is uniform.  The set for a budget is a prefix of
    the set for any larger budget.
    """
    nx, ny = seeds.nx, seeds.ny
    if nx * ny < 2:
        raise ValueError("need at least 2 seeds")
    levels = 2 ** np.arange(0, int(math.log2(max(nx, ny) // 2)) + 1)
    u = stream(seed, "seed-pairs").random((pair_budget, 4))
    m = levels[np.minimum((u[:, 0] * len(levels)).astype(int), len(levels) - 1)]
    th = 2 * np.pi * u[:, 1]
    di = np.rint(m * np.cos(th)).astype(np.int64)
    dj = np.rint(m * np.sin(th)).astype(np.int64)
    di = np.clip(di, -(nx - 1), nx - 1)
    dj = np.clip(dj, -(ny - 1), ny - 1)
    zero = (di == 0) & (dj == 0)
    di[zero] = 1
    i0 = np.floor(u[:, 2] * (nx - np.abs(di))).astype(np.int64) + np.maximum(0, -di)
    j0 = np.floor(u[:, 3] * (ny - np.abs(dj))).astype(np.int64) + np.maximum(0, -dj)
    a = j0 * nx + i0
    b = (j0 + dj) * nx + (i0 + di)
    return a, b


def modulus_of_pairs(x: np.ndarray, y: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> ModulusReport:
    d = np.hypot(*(x - y).T)
    D = np.hypot(*(fx - fy).T)
    vals = phi(D, d)
    k = int(np.argmax(vals))
    return ModulusReport(float(vals[k]), (x[k], y[k], fx[k], fy[k]), len(vals))


def star_modulus(smap: SampledMap, pair_budget: int = 20000, seed: int = 0) -> ModulusReport:
    """Lower estimate of the modulus over :func:`seed_pairs`."""
    a, b = seed_pairs(smap.grid, pair_budget, seed)
    S = smap.seeds.reshape(-1, 2)
    F = smap.forward.reshape(-1, 2)
    return modulus_of_pairs(S[a], S[b], F[a], F[b])


def star_modulus_inverse_mapped(smap: SampledMap, pair_budget: int = 20000, seed: int = 0) -> ModulusReport:
    """Modulus of the inverse evaluated on the image pairs ``(psi(x), psi(y))``."""
    a, b = seed_pairs(smap.grid, pair_budget, seed)
    S = smap.seeds.reshape(-1, 2)
    F = smap.forward.reshape(-1, 2)
    return modulus_of_pairs(F[a], F[b], S[a], S[b])


def p1_case_bounds(d: np.ndarray, M: float):
    """Lower/upper bounds on ``|psi(x)-psi(y)|`` given ``d=|x-y|``, for both sides' cases."""
    lo_big, up_big = np.exp(-1.0) * d ** (1.0 / M), np.exp(M) * d**M
    lo_small, up_small = np.exp(-M) * d**M, np.e * d ** (1.0 / M)
    lo_mixed, up_mixed = np.exp(-M) * d, np.exp(M) * d
    return (lo_big, up_big), (lo_small, up_small), (lo_mixed, up_mixed)


def check_p1_bounds(smap: SampledMap, star: float, pair_budget: int = 100000, seed: int = 0) -> float:
    """Worst relative violation of the three-case distance bounds (<= 0: none)."""
    a, b = seed_pairs(smap.grid, pair_budget, seed + 1)
    S = smap.seeds.reshape(-1, 2)
    F = smap.forward.reshape(-1, 2)
    d = np.hypot(*(S[a] - S[b]).T)
    D = np.hypot(*(F[a] - F[b]).T)
    (lb, ub), (ls, us), (lm, um) = p1_case_bounds(d, star)
    big = (d >= 1.0) & (D >= 1.0)
    small = (d <= 1.0) & (D <= 1.0)
    lo = np.where(big, lb, np.where(small, ls, lm))
    up = np.where(big, ub, np.where(small, us, um))
    viol = np.maximum(lo / D - 1.0, D / up - 1.0)
    return float(np.max(viol))


# ---------------------------------------------------------------- integration


class VelocitySeries:
    """Velocity frames at increasing times, bilinear in space and linear in time.

    A single frame is a stationary field.
    """

    def __init__(self, times: Sequence[float], frames: Sequence[VectorField2D]):
        if len(times) != len(frames) or not frames:
            raise ValueError("need one frame per time")
        t = np.asarray(times, dtype=np.float64)
        if np.any(np.diff(t) <= 0):
            raise ValueError("frame times must increase")
        self.times = t
        self.frames = list(frames)

    @classmethod
    def stationary(cls, fld: VectorField2D) -> VelocitySeries:
        return cls([0.0], [fld])

    def max_speed(self) -> float:
        return max(f.max_speed() for f in self.frames)

    def __call__(self, t: float, pts: np.ndarray) -> np.ndarray:
        if len(self.frames) == 1:
            return interp_bilinear(self.frames[0], pts)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        t0, t1 = self.times[k], self.times[k + 1]
        w = min(max((t - t0) / (t1 - t0), 0.0), 1.0)
        va = interp_bilinear(self.frames[k], pts)
        if w == 0.0:
            return va
        vb = interp_bilinear(self.frames[k + 1], pts)
        return (1.0 - w) * va + w * vb


def rk4_positions(vel: Callable, pts: np.ndarray, t0: float, t1: float, dt: float,
                  record: Sequence[float] = ()) -> tuple[np.ndarray, dict]:
    """Classical RK4 for ``x' = u(t, x)`` from ``t0`` to ``t1`` (either direction).

    Returns the end positions and a dict of positions at the ``record`` times,
    which must fall on the step grid.
    """
    span = t1 - t0
    n = max(1, int(math.ceil(abs(span) / dt - 1e-9)))
    h = span / n
    x = np.array(pts, dtype=np.float64)
    want = {round((tr - t0) / h): tr for tr in record} if record else {}
    snaps = {}
    if 0 in want:
        snaps[want[0]] = x.copy()
    for k in range(n):
        t = t0 + k * h
        k1 = vel(t, x)
        k2 = vel(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = vel(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = vel(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k + 1 in want:
            snaps[want[k + 1]] = x.copy()
    return x, snaps


def max_dt(vel: VelocitySeries, seeds: GridSpec) -> float:
    umax = vel.max_speed()
    return math.inf if umax == 0 else 0.5 * seeds.h / umax


def _check_cfl(vel: VelocitySeries, seeds: GridSpec, dt: float) -> None:
    lim = max_dt(vel, seeds)
    if dt > lim:
        raise CFLError(f"dt={dt:g} violates the advective CFL limit; max admissible dt is {lim:.6g}")


def integrate_flow(vel: VelocitySeries, seeds: GridSpec, dt: float, T: float,
                   direction: str = "forward", validate: bool = True) -> SampledMap:
    """Flow map ``psi_T`` on the seed lattice (``direction='backward'``: its inverse)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    _check_cfl(vel, seeds, dt)
    X1, X2 = seeds.mesh()
    pts = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    fwd, _ = rk4_positions(vel, pts, 0.0, T, dt)
    inv, _ = rk4_positions(vel, pts, T, 0.0, dt)
    back, _ = rk4_positions(vel, inv, 0.0, T, dt)
    rt = float(np.max(np.abs(back - pts)))
    shape = seeds.shape + (2,)
    F, G = fwd.reshape(shape), inv.reshape(shape)
    jac = float(np.max(np.abs(jacobian_det_lattice(F, seeds) - 1.0)))
    jac_inv = float(np.max(np.abs(jacobian_det_lattice(G, seeds) - 1.0)))
    smap = SampledMap(seeds, F, G, "integrated", rt, max(jac, jac_inv), {"T": T, "dt": dt})
    if direction == "backward":
        smap = smap.inverted()
    return smap.validate() if validate else smap


@dataclass
class FlowModulusRow:
    t: float
    star: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.star / self.bound

    @property
    def warning(self) -> bool:
        return 1.0 < self.ratio <= 1.1


def ll_integral(times_ll: np.ndarray, ll: np.ndarray, t: float) -> float:
    """Trapezoidal ``int_0^t ll``; ``ll`` piecewise linear between frame times, constant outside."""
    if len(times_ll) == 1:
        return float(ll[0] * t)
    grid = np.union1d(times_ll[times_ll < t], [0.0, t])
    grid = grid[(grid >= 0) & (grid <= t)]
    vals = np.interp(grid, times_ll, ll)
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)))


def check_flow_modulus(vel: VelocitySeries, seeds: GridSpec, dt: float, times: Sequence[float],
                       pair_budget: int = 20000, ll_budget: int = 4000, seed: int = 0,
                       ) -> list[FlowModulusRow]:
    """``star(psi_t)`` against ``exp(int_0^t ll(u))`` at each requested time."""
    ll = np.array([ll_norm_estimate(f, ll_budget, seed) for f in vel.frames])
    rows = []
    for t in times:
        if t == 0:
            rows.append(FlowModulusRow(0.0, 1.0, 1.0))
            continue
        smap = integrate_flow(vel, seeds, dt, t)
        star = star_modulus(smap, pair_budget, seed).star
        rows.append(FlowModulusRow(float(t), star, math.exp(ll_integral(vel.times, ll, t))))
    return rows


# ---------------------------------------------------------------- persistence


def save_sampled_map(stem, smap: SampledMap) -> tuple[Path, Path]:
    """``<stem>.f2d`` holds forward then inverse as vector records; ``<stem>.json`` the rest."""
    stem = Path(stem)
    f2d, side = stem.with_suffix(".f2d"), stem.with_suffix(".json")
    with open(f2d, "wb") as fh:
        for arr in (smap.forward, smap.inverse):
            write_record(fh, smap.grid, arr[..., 0])
            write_record(fh, smap.grid, arr[..., 1])
    meta = {
        "kind": smap.kind,
        "tol_inv": smap.tol_inv,
        "tol_jac": smap.tol_jac,
        "roundtrip_error": smap.roundtrip_error,
        "jacobian_error": smap.jacobian_error,
        "provenance": smap.meta,
    }
    side.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return f2d, side


def load_sampled_map(stem) -> SampledMap:
    stem = Path(stem)
    recs = load_records(stem.with_suffix(".f2d"))
    if len(recs) != 4:
        raise ValueError(f"{stem}.f2d: expected 4 records (forward and inverse vectors), got {len(recs)}")
    meta = json.loads(stem.with_suffix(".json").read_text())
    grid = recs[0][0]
    fwd = np.stack([recs[0][1], recs[1][1]], axis=-1)
    inv = np.stack([recs[2][1], recs[3][1]], axis=-1)
    return SampledMap(grid, fwd, inv, meta["kind"], meta["roundtrip_error"], meta["jacobian_error"],
                      meta.get("provenance", {}))
