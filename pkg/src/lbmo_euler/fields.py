"""Uniform grids, sampled fields, interpolation, Lp norms and mollification.

Every grid is a flat torus ``[ox, ox+lx) x [oy, oy+ly)`` in the discrete
sense (indices wrap).  ``periodic=False`` marks a *window* onto a function
defined on the whole plane: the geometry used by ball averages and pair
sampling is then Euclidean and nothing may cross the window edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float = TWO_PI
    ly: float = TWO_PI
    ox: float = 0.0
    oy: float = 0.0
    periodic: bool = True

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny must be integers")
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid needs nx, ny >= 8, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("side lengths must be positive")

    @classmethod
    def window(cls, n: int, lo: float, hi: float, ny: int | None = None) -> GridSpec:
        """Square plane window ``[lo, hi)^2`` sampled with ``n`` points per side."""
        return cls(n, ny or n, hi - lo, hi - lo, lo, lo, periodic=False)

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def x(self) -> np.ndarray:
        return self.ox + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.oy + self.hy * np.arange(self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as ``(X1, X2)`` arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def is_pow2(self) -> bool:
        return _is_pow2(self.nx) and _is_pow2(self.ny)

    def to_header(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "lx": self.lx,
            "ly": self.ly,
            "ox": self.ox,
            "oy": self.oy,
            "periodic": self.periodic,
        }


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScalarField2D:
    """Scalar samples; ``values[j, i]`` is the value at ``(x_i, y_j)``.

    Flattened row-major this is ``values[j*nx + i]``.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size != self.grid.nx * self.grid.ny:
            raise ValueError(
                f"expected {self.grid.nx * self.grid.ny} values, got {v.size}"
            )
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            j, i = np.argwhere(~np.isfinite(v))[0]
            raise ValueError(f"non-finite value at node (i={i}, j={j})")
        object.__setattr__(self, "values", _frozen(v))

    def with_values(self, values) -> ScalarField2D:
        return ScalarField2D(self.grid, values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __mul__(self, c: float) -> ScalarField2D:
        return ScalarField2D(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: ScalarField2D) -> ScalarField2D:
        _same_grid(self.grid, other.grid)
        return ScalarField2D(self.grid, self.values + other.values)

    def __sub__(self, other: ScalarField2D) -> ScalarField2D:
        _same_grid(self.grid, other.grid)
        return ScalarField2D(self.grid, self.values - other.values)

    def shifted(self, di: int, dj: int) -> ScalarField2D:
        """Translate by whole grid steps: new value at node i equals old at i-di."""
        return ScalarField2D(self.grid, np.roll(self.values, (dj, di), axis=(0, 1)))


@dataclass(frozen=True)
class VectorField2D:
    grid: GridSpec
    u1: np.ndarray = field(repr=False)
    u2: np.ndarray = field(repr=False)

    def __post_init__(self):
        comps = []
        for name in ("u1", "u2"):
            v = np.asarray(getattr(self, name), dtype=np.float64).reshape(self.grid.shape)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite value in {name}")
            comps.append(_frozen(v))
        object.__setattr__(self, "u1", comps[0])
        object.__setattr__(self, "u2", comps[1])

    def max_speed(self) -> float:
        return float(np.sqrt(np.max(self.u1**2 + self.u2**2)))

    def __mul__(self, c: float) -> VectorField2D:
        return VectorField2D(self.grid, self.u1 * c, self.u2 * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Ball:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def dilate(self, lam: float) -> Ball:
        return Ball(self.center, lam * self.radius)


def _same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise ValueError("fields live on different grids")


def sample_analytic(spec: GridSpec, fn: Callable) -> ScalarField2D:
    """Evaluate ``fn(x1, x2)`` (numpy-vectorized) at every node of ``spec``."""
    X1, X2 = spec.mesh()
    with np.errstate(all="ignore"):
        v = np.asarray(fn(X1, X2), dtype=np.float64)
    v = np.broadcast_to(v, spec.shape)
    bad = ~np.isfinite(v)
    if bad.any():
        j, i = np.argwhere(bad)[0]
        raise ValueError(
            f"non-finite sample at node (i={i}, j={j}), x=({X1[j, i]!r}, {X2[j, i]!r})"
        )
    return ScalarField2D(spec, v)


def sample_vector(spec: GridSpec, fn: Callable) -> VectorField2D:
    """``fn(x1, x2) -> (u1, u2)``."""
    X1, X2 = spec.mesh()
    u1, u2 = fn(X1, X2)
    return VectorField2D(spec, np.broadcast_to(u1, spec.shape), np.broadcast_to(u2, spec.shape))


def lbmo_example(x1, x2, floor: float, center=(0.0, 0.0)):
    """``ln(1 - ln|x|)`` inside the unit disk, 0 outside, with ``|x|`` clamped below at ``floor``."""
    rho = np.hypot(np.asarray(x1) - center[0], np.asarray(x2) - center[1])
    rho = np.maximum(rho, floor)
    inside = rho < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.log(1.0 - np.log(np.where(inside, rho, 1.0)))
    return np.where(inside, val, 0.0)


def _fractional_index(coord, origin: float, h: float, n: int):
    xi = np.mod((np.asarray(coord, dtype=np.float64) - origin) / h, n)
    # snap to nodes so node evaluation is exact
    r = np.rint(xi)
    xi = np.where(np.abs(xi - r) < 1e-9, r, xi)
    xi = np.mod(xi, n)
    i0 = np.floor(xi).astype(np.int64)
    t = xi - i0
    return i0 % n, (i0 + 1) % n, t


def _bilinear(values: np.ndarray, grid: GridSpec, px, py):
    i0, i1, tx = _fractional_index(px, grid.ox, grid.hx, grid.nx)
    j0, j1, ty = _fractional_index(py, grid.oy, grid.hy, grid.ny)
    v00 = values[j0, i0]
    v10 = values[j0, i1]
    v01 = values[j1, i0]
    v11 = values[j1, i1]
    return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11)


def interp_bilinear(fld: ScalarField2D | VectorField2D, point):
    """Bilinear interpolation, with indices wrapped periodically.

    ``point`` is either a pair or an array of shape ``(..., 2)``.  Scalars
    come back as float / array of shape ``(...)``; vector fields as a pair /
    array of shape ``(..., 2)``.
    """
    p = np.asarray(point, dtype=np.float64)
    scalar_query = p.ndim == 1
    px, py = p[..., 0], p[..., 1]
    if isinstance(fld, VectorField2D):
        out = np.stack(
            [_bilinear(fld.u1, fld.grid, px, py), _bilinear(fld.u2, fld.grid, px, py)],
            axis=-1,
        )
        return tuple(float(c) for c in out) if scalar_query else out
    out = _bilinear(fld.values, fld.grid, px, py)
    return float(out) if scalar_query else out


def lp_norm(fld: ScalarField2D, p: float) -> float:
    """Discrete ``L^p`` norm ``(sum |v|^p hx hy)^(1/p)``; ``p=inf`` gives max|v|."""
    if p == math.inf or p == "inf":
        return float(np.max(np.abs(fld.values)))
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    a = np.abs(fld.values)
    if p == 1.0:
        return float(np.sum(a) * fld.grid.cell_area)
    if p == 2.0:
        return float(math.sqrt(np.sum(a * a) * fld.grid.cell_area))
    return float((np.sum(a**p) * fld.grid.cell_area) ** (1.0 / p))


def max_mollifier_n(spec: GridSpec) -> int:
    return int(math.floor(1.0 / (2.0 * spec.h)))


def mollifier_weights(spec: GridSpec, n: int) -> np.ndarray:
    """Discrete weights of ``n^2 rho(n x)`` on the grid offsets, summing to 1.

    ``rho(x) = exp(-1/(1-|x|^2))`` on the unit disk.  The analytic
    normalization constant cancels in the renormalization.
    """
    if n < 1:
        raise ValueError("mollifier index n must be a positive integer")
    if 1.0 / n < 2.0 * spec.h:
        raise ValueError(
            f"mollifier n={n} too large for this grid (width 1/n < 2h); "
            f"max admissible n is {max_mollifier_n(spec)}"
        )
    ax = int(math.ceil(1.0 / (n * spec.hx)))
    ay = int(math.ceil(1.0 / (n * spec.hy)))
    ox = np.arange(-ax, ax + 1) * spec.hx * n
    oy = np.arange(-ay, ay + 1) * spec.hy * n
    q = oy[:, None] ** 2 + ox[None, :] ** 2
    w = np.zeros_like(q)
    inside = q < 1.0
    w[inside] = np.exp(-1.0 / (1.0 - q[inside]))
    return w / w.sum()


def mollify(fld: ScalarField2D, n: int) -> ScalarField2D:
    """Periodic discrete convolution with the rescaled bump ``rho_n``.

    The weights are nonnegative and sum to one, so every output node is a
    convex combination of input nodes.
    """
    w = mollifier_weights(fld.grid, n)
    out = ndimage.convolve(np.array(fld.values), w, mode="wrap")
    return ScalarField2D(fld.grid, out)
