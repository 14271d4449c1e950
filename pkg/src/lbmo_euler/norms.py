"""Ball averages and finite-family estimators of BMO, LBMO and LL norms.

The analytic norms are suprema over all balls, ball pairs or point pairs.
Here each supremum runs over a deterministic finite family instead, so every
estimate is a lower bound of the true value and can only grow when the
family is enriched.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .fields import Ball, GridSpec, ScalarField2D, VectorField2D, interp_bilinear, lp_norm
from .parallel import pmap
from .rng import stream

MIN_NODES = 25
INNER_PER_SCALE = 4


class TooFewNodesError(ValueError):
    pass


def max_j(spec: GridSpec) -> int:
    """Deepest dyadic level whose balls keep the 25-node guarantee."""
    return int(math.floor(math.log2(1.0 / (5.0 * spec.h))))


def lbmo_denominator(r1, r2):
    """``1 + ln((1 - ln r2) / (1 - ln r1))``; at least 1 whenever r2 <= r1 <= 1."""
    return 1.0 + np.log((1.0 - np.log(r2)) / (1.0 - np.log(r1)))


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class BallFamily:
    spec: GridSpec
    centers: np.ndarray = field(repr=False)  # (N, 2)
    radii: np.ndarray = field(repr=False)  # (N,)
    pairs: np.ndarray = field(repr=False)  # (P, 2) int, (outer, inner)
    scale_range: tuple[float, float]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def balls(self) -> list[Ball]:
        return [Ball((c[0], c[1]), r) for c, r in zip(self.centers, self.radii)]

    def __len__(self) -> int:
        return len(self.radii)

    def with_balls(self, extra: list[Ball], extra_pairs=()) -> BallFamily:
        """Enriched family: old balls and pairs first, ``extra`` appended."""
        c = np.vstack([self.centers, [b.center for b in extra]]) if extra else self.centers
        r = np.concatenate([self.radii, [b.radius for b in extra]]) if extra else self.radii
        p = np.vstack([self.pairs.reshape(-1, 2), np.asarray(extra_pairs, dtype=np.int64).reshape(-1, 2)])
        _check_pairs(c, r, p, self.spec)
        return BallFamily(self.spec, c, r, p, (float(r.min()), float(r.max())), dict(self.meta))

    def shifted(self, dx: float, dy: float) -> BallFamily:
        c = self.centers + np.array([dx, dy])
        return BallFamily(self.spec, c, self.radii, self.pairs, self.scale_range, dict(self.meta))

    def describe(self) -> dict:
        return {
            "n_balls": int(len(self.radii)),
            "n_pairs": int(len(self.pairs)),
            "r_min": self.scale_range[0],
            "r_max": self.scale_range[1],
            **self.meta,
        }


def _pair_distance(spec: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    if spec.periodic:
        L = np.array([spec.lx, spec.ly])
        d = d - L * np.rint(d / L)
    return np.hypot(d[..., 0], d[..., 1])


def _check_pairs(centers, radii, pairs, spec) -> None:
    if len(pairs) == 0:
        return
    i1, i2 = pairs[:, 0], pairs[:, 1]
    r1, r2 = radii[i1], radii[i2]
    d = _pair_distance(spec, centers[i1], centers[i2])
    if np.any(r1 > 1.0) or np.any(d + 2.0 * r2 > r1):
        raise ValueError("pair violates r1 <= 1 and 2*B2 inside B1")
    if np.any(lbmo_denominator(r1, r2) < 1.0):
        raise AssertionError("LBMO denominator below 1 for an admissible pair")


def _center_box(spec: GridSpec, r: float):
    """Admissible center rectangle for radius ``r`` (None if no ball fits)."""
    if spec.periodic:
        return (spec.ox, spec.ox + spec.lx), (spec.oy, spec.oy + spec.ly)
    xs = (spec.ox + r, spec.ox + spec.lx - r)
    ys = (spec.oy + r, spec.oy + spec.ly - r)
    if xs[0] > xs[1] + 1e-12 or ys[0] > ys[1] + 1e-12:
        return None
    return (xs[0], max(xs)), (ys[0], max(ys))


def make_ball_family(
    spec: GridSpec,
    j_max: int,
    centers_per_scale: int,
    seed: int,
    inner_per_scale: int = INNER_PER_SCALE,
) -> BallFamily:
    """Dyadic ball family with admissible (outer, inner) pairs.

    Radii are ``2^-j`` for ``0 <= j <= j_max``.  Each scale gets the midpoint
    of its admissible center box plus ``centers_per_scale - 1`` points of a
    scrambled Halton sequence.  For every outer ball and every finer level
    ``j2 > j1`` the inner balls are the concentric ball and
    ``inner_per_scale - 1`` Halton points in the disk of radius ``r1 - 2 r2``
    around the outer center, so ``|x1 - x2| + 2 r2 <= r1`` holds by
    construction (and is re-checked).
    """
    if j_max < 0 or centers_per_scale < 1:
        raise ValueError("j_max must be >= 0 and centers_per_scale >= 1")
    jm = max_j(spec)
    if j_max > jm:
        raise ValueError(
            f"j_max={j_max} too deep for grid spacing {spec.h:.4g}: balls of radius "
            f"2^-{j_max} hold fewer than {MIN_NODES} nodes; max admissible j_max is {jm}"
        )
    centers: list[tuple[float, float]] = []
    radii: list[float] = []
    index: dict[tuple[float, float, float], int] = {}

    def add(cx: float, cy: float, r: float) -> int:
        key = (cx, cy, r)
        if key not in index:
            index[key] = len(radii)
            centers.append((cx, cy))
            radii.append(r)
        return index[key]

    outer_by_scale: list[list[int]] = []
    for j in range(j_max + 1):
        r = 2.0**-j
        box = _center_box(spec, r)
        ids: list[int] = []
        if box is not None:
            (x0, x1), (y0, y1) = box
            ids.append(add(0.5 * (x0 + x1), 0.5 * (y0 + y1), r))
            if centers_per_scale > 1:
                q = qmc.Halton(d=2, scramble=True, seed=stream(seed, f"ball-centers-{j}"))
                u = q.random(centers_per_scale - 1)
                for ux, uy in u:
                    ids.append(add(x0 + ux * (x1 - x0), y0 + uy * (y1 - y0), r))
        outer_by_scale.append(ids)

    pairs: list[tuple[int, int]] = []
    shrink = 1.0 - 1e-9
    for j1 in range(j_max + 1):
        r1 = 2.0**-j1
        for j2 in range(j1 + 1, j_max + 1):
            r2 = 2.0**-j2
            reach = (r1 - 2.0 * r2) * shrink
            if reach > 0 and inner_per_scale > 1:
                q = qmc.Halton(d=2, scramble=True, seed=stream(seed, f"inner-{j1}-{j2}"))
                u = q.random(inner_per_scale - 1)
                offs = np.column_stack(
                    [
                        reach * np.sqrt(u[:, 0]) * np.cos(2 * np.pi * u[:, 1]),
                        reach * np.sqrt(u[:, 0]) * np.sin(2 * np.pi * u[:, 1]),
                    ]
                )
            else:
                offs = np.zeros((0, 2))
            offs = np.vstack([[0.0, 0.0], offs])
            for i1 in outer_by_scale[j1]:
                cx, cy = centers[i1]
                for ox, oy in offs:
                    x2, y2 = cx + ox, cy + oy
                    if math.hypot(x2 - cx, y2 - cy) + 2.0 * r2 > r1:
                        continue
                    pairs.append((i1, add(x2, y2, r2)))

    c = np.array(centers, dtype=np.float64).reshape(-1, 2)
    rr = np.array(radii, dtype=np.float64)
    p = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    _check_pairs(c, rr, p, spec)
    meta = {"j_max": j_max, "centers_per_scale": centers_per_scale, "seed": seed}
    return BallFamily(spec, c, rr, p, (float(rr.min()), float(rr.max())), meta)


# ---------------------------------------------------------------- ball stats


def _ball_block(fld: ScalarField2D, cx: float, cy: float, r: float, min_nodes: int = MIN_NODES):
    g = fld.grid
    ci = (cx - g.ox) / g.hx
    cj = (cy - g.oy) / g.hy
    ri, rj = r / g.hx, r / g.hy
    i_lo, i_hi = math.ceil(ci - ri), math.floor(ci + ri)
    j_lo, j_hi = math.ceil(cj - rj), math.floor(cj + rj)
    if g.periodic:
        if 2 * r > min(g.lx, g.ly):
            raise ValueError(f"ball radius {r} exceeds half the torus period")
        ii = np.arange(i_lo, i_hi + 1)
        jj = np.arange(j_lo, j_hi + 1)
        block = fld.values[np.ix_(jj % g.ny, ii % g.nx)]
    else:
        tol = 1e-12 * max(g.lx, g.ly)
        if (
            cx - r < g.ox - tol
            or cy - r < g.oy - tol
            or cx + r > g.ox + g.lx + tol
            or cy + r > g.oy + g.ly + tol
        ):
            raise ValueError(f"ball B(({cx:.6g}, {cy:.6g}), {r:.6g}) crosses the window edge")
        i_lo, j_lo = max(i_lo, 0), max(j_lo, 0)
        i_hi, j_hi = min(i_hi, g.nx - 1), min(j_hi, g.ny - 1)
        ii = np.arange(i_lo, i_hi + 1)
        jj = np.arange(j_lo, j_hi + 1)
        block = fld.values[j_lo : j_hi + 1, i_lo : i_hi + 1]
    dx = (ii - ci) * g.hx
    dy = (jj - cj) * g.hy
    mask = dy[:, None] ** 2 + dx[None, :] ** 2 < r * r
    vals = block[mask]
    if vals.size < min_nodes:
        raise TooFewNodesError(
            f"ball B(({cx:.6g}, {cy:.6g}), {r:.6g}) holds {vals.size} nodes (< {min_nodes})"
        )
    return vals


def count_nodes(fld_or_spec, ball: Ball) -> int:
    spec = fld_or_spec.grid if isinstance(fld_or_spec, ScalarField2D) else fld_or_spec
    dummy = ScalarField2D(spec, np.zeros(spec.shape))
    return int(_ball_block(dummy, *ball.center, ball.radius, min_nodes=0).size)


def ball_average(fld: ScalarField2D, ball: Ball) -> float:
    """Mean of the node values strictly inside ``ball``."""
    return float(np.mean(_ball_block(fld, ball.center[0], ball.center[1], ball.radius)))


def ball_oscillation(fld: ScalarField2D, ball: Ball) -> float:
    """Mean absolute deviation from the ball's own average."""
    vals = _ball_block(fld, ball.center[0], ball.center[1], ball.radius)
    return float(np.mean(np.abs(vals - np.mean(vals))))


def family_stats(fld: ScalarField2D, fam: BallFamily, oscillation: bool = True):
    """Per-ball averages and (optionally) mean oscillations, as arrays."""
    if fam.spec != fld.grid:
        raise ValueError("ball family was built for a different grid")

    def one(k: int):
        vals = _ball_block(fld, fam.centers[k, 0], fam.centers[k, 1], fam.radii[k])
        m = np.mean(vals)
        return m, (np.mean(np.abs(vals - m)) if oscillation else 0.0)

    out = np.array(pmap(one, range(len(fam))), dtype=np.float64).reshape(-1, 2)
    return out[:, 0], out[:, 1]


def bmo_estimate(fld: ScalarField2D, fam: BallFamily) -> float:
    _, osc = family_stats(fld, fam)
    return float(osc.max())


def _second_term(means: np.ndarray, fam: BallFamily) -> float:
    if len(fam.pairs) == 0:
        raise ValueError("family has no admissible pairs")
    i1, i2 = fam.pairs[:, 0], fam.pairs[:, 1]
    num = np.abs(means[i2] - means[i1])
    return float(np.max(num / lbmo_denominator(fam.radii[i1], fam.radii[i2])))


def lbmo_second_term(fld: ScalarField2D, fam: BallFamily) -> float:
    if len(fam.pairs) == 0:
        raise ValueError("family has no admissible pairs")
    means, _ = family_stats(fld, fam, oscillation=False)
    return _second_term(means, fam)


# ---------------------------------------------------------------- reports


def _p_key(p) -> str:
    return "inf" if p == math.inf else f"{float(p):g}"


@dataclass
class NormReport:
    lp: dict
    bmo: float
    lbmo_second_term: float
    lbmo: float
    ll: float | None = None
    meta: dict = field(default_factory=dict)

    def flat(self) -> dict:
        d = {f"lp{k}": v for k, v in self.lp.items()}
        d.update(bmo=self.bmo, lbmo2=self.lbmo_second_term, lbmo=self.lbmo, ll=self.ll)
        d.update(self.meta)
        return d

    def to_json(self) -> str:
        return json.dumps(self.flat(), sort_keys=False)

    def csv_row(self, t: float) -> list:
        """Row for the ``t,lp2,bmo,lbmo2,lbmo,ll`` time-series schema."""
        return [t, self.lp.get("2"), self.bmo, self.lbmo_second_term, self.lbmo, self.ll]


CSV_HEADER = ["t", "lp2", "bmo", "lbmo2", "lbmo", "ll"]


def lbmo_estimate(fld: ScalarField2D, fam: BallFamily, ps=(2.0, math.inf)) -> NormReport:
    means, osc = family_stats(fld, fam)
    bmo = float(osc.max())
    second = _second_term(means, fam)
    meta = {
        "n_balls": len(fam),
        "n_pairs": len(fam.pairs),
        "grid": f"{fld.grid.nx}x{fld.grid.ny}",
    }
    return NormReport(
        lp={_p_key(p): lp_norm(fld, p) for p in ps},
        bmo=bmo,
        lbmo_second_term=second,
        lbmo=bmo + second,
        meta=meta,
    )


def check_two_ball_bound(fld: ScalarField2D, fam: BallFamily) -> float:
    """Largest ``|av_B2 - av_B1| / (ln(1 + r1/r2) * bmo)`` over the family pairs."""
    if len(fam.pairs) == 0:
        raise ValueError("family has no admissible pairs")
    means, osc = family_stats(fld, fam)
    bmo = float(osc.max())
    scale = float(np.max(np.abs(fld.values)))
    if bmo <= 1e-14 * scale or bmo == 0.0:
        raise ValueError("field is constant at this resolution")
    i1, i2 = fam.pairs[:, 0], fam.pairs[:, 1]
    num = np.abs(means[i2] - means[i1])
    den = np.log1p(fam.radii[i1] / fam.radii[i2]) * bmo
    return float(np.max(num / den))


# ---------------------------------------------------------------- log-Lipschitz


def ll_quotient(dv: np.ndarray, d: np.ndarray) -> np.ndarray:
    return dv / (d * (1.0 + np.abs(np.log(d))))


def _separations(spec: GridSpec) -> np.ndarray:
    lo = math.ceil(math.log2(spec.h))
    span = min(spec.lx, spec.ly)
    hi = math.floor(math.log2(span / 2.0 if spec.periodic else span * 0.75))
    return 2.0 ** np.arange(lo, hi + 1)


def ll_pair_set(spec: GridSpec, pair_budget: int, seed: int):
    """Deterministic point pairs ``(x, y)`` for the LL quotient.

    A quarter of the budget (capped) goes to adjacent node pairs on a
    decimated sublattice, the rest to random pairs at dyadic separations.
    Both parts are prefixes of fixed streams, so a larger budget yields a
    superset of pairs.
    """
    if pair_budget < 1000:
        raise ValueError("pair_budget must be at least 1000")
    stride = max(1, min(spec.nx, spec.ny) // 64)
    ii = np.arange(0, spec.nx - (0 if spec.periodic else 1), stride)
    jj = np.arange(0, spec.ny - (0 if spec.periodic else 1), stride)
    I, J = np.meshgrid(ii, jj)
    I, J = I.ravel(), J.ravel()
    base = np.column_stack([spec.ox + I * spec.hx, spec.oy + J * spec.hy])
    adj_x = np.column_stack([base, base + [spec.hx, 0.0]])
    adj_y = np.column_stack([base, base + [0.0, spec.hy]])
    adj = np.empty((2 * len(base), 4))
    adj[0::2], adj[1::2] = adj_x, adj_y
    adj = adj[stream(seed, "ll-adjacent").permutation(len(adj))]

    n_adj = min(len(adj), pair_budget // 4)
    n_rand = pair_budget - n_adj
    seps = _separations(spec)
    u = stream(seed, "ll-random").random((n_rand, 5))
    s = seps[np.minimum((u[:, 0] * len(seps)).astype(int), len(seps) - 1)]
    theta = np.where(u[:, 1] < 0.25, 0.0, np.where(u[:, 1] < 0.5, 0.5 * np.pi, 2 * np.pi * u[:, 2]))
    e1, e2 = np.cos(theta), np.sin(theta)
    if spec.periodic:
        x1 = spec.ox + u[:, 3] * spec.lx
        x2 = spec.oy + u[:, 4] * spec.ly
        ok = np.ones(n_rand, dtype=bool)
    else:
        hi1 = spec.ox + spec.lx - spec.hx
        hi2 = spec.oy + spec.ly - spec.hy
        lo1 = spec.ox + np.maximum(0.0, -s * e1)
        up1 = hi1 - np.maximum(0.0, s * e1)
        lo2 = spec.oy + np.maximum(0.0, -s * e2)
        up2 = hi2 - np.maximum(0.0, s * e2)
        ok = (up1 >= lo1) & (up2 >= lo2)
        x1 = lo1 + u[:, 3] * (up1 - lo1)
        x2 = lo2 + u[:, 4] * (up2 - lo2)
    rnd = np.column_stack([x1, x2, x1 + s * e1, x2 + s * e2])[ok]
    return np.vstack([adj[:n_adj], rnd])


def ll_norm_estimate(vel: VectorField2D, pair_budget: int = 4000, seed: int = 0) -> float:
    """Max of ``|v(x)-v(y)| / (|x-y| (1 + |ln|x-y||))`` over :func:`ll_pair_set`."""
    pr = ll_pair_set(vel.grid, pair_budget, seed)
    a, b = pr[:, :2], pr[:, 2:]
    va = interp_bilinear(vel, a)
    vb = interp_bilinear(vel, b)
    dv = np.hypot(va[:, 0] - vb[:, 0], va[:, 1] - vb[:, 1])
    d = _pair_distance(vel.grid, a, b)
    keep = d > 0
    if not keep.any():
        return 0.0
    return float(np.max(ll_quotient(dv[keep], d[keep])))
