"""Measure-preserving test maps with known inverses.

All maps act on ``(..., 2)`` point arrays as maps of the plane.  Torus maps
(shears along a periodic coordinate, compactly supported twists, quarter
turns about a lattice point) are given by their planar lifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import GridSpec
from .flow import SampledMap


@dataclass(frozen=True)
class MapZooEntry:
    name: str
    family: str
    params: dict = field(default_factory=dict)
    analytic_star: float | None = None

    def functions(self) -> tuple[Callable, Callable]:
        return _BUILDERS[self.family](**self.params)

    def sample(self, seeds: GridSpec) -> SampledMap:
        fwd, inv = self.functions()
        return SampledMap.from_functions(seeds, fwd, inv, name=self.name, **self.params)


def _identity():
    f = lambda p: np.array(p, dtype=np.float64)  # noqa: E731
    return f, f


def _snap(v: float) -> float:
    return float(round(v)) if abs(v - round(v)) < 1e-15 else v


def _rotation(angle: float, center=(0.0, 0.0)):
    c, s = math.cos(angle), math.sin(angle)
    # quarter turns permute coordinates exactly
    c, s = _snap(c), _snap(s)
    cx, cy = center

    def rot(p, sgn):
        x, y = p[..., 0] - cx, p[..., 1] - cy
        return np.stack([cx + c * x - sgn * s * y, cy + sgn * s * x + c * y], axis=-1)

    return (lambda p: rot(p, 1.0)), (lambda p: rot(p, -1.0))


def _sine_shear(amp: float, wavenumber: int = 1):
    def f(p, sgn):
        return np.stack([p[..., 0] + sgn * amp * np.sin(wavenumber * p[..., 1]), p[..., 1]], axis=-1)

    return (lambda p: f(p, 1.0)), (lambda p: f(p, -1.0))


def _linear_shear(s: float):
    def f(p, sgn):
        return np.stack([p[..., 0] + sgn * s * p[..., 1], p[..., 1]], axis=-1)

    return (lambda p: f(p, 1.0)), (lambda p: f(p, -1.0))


def twist_profile(rho, amp: float, radius: float):
    """``amp * (1 - (rho/radius)^2)^4`` inside the radius, 0 outside (C^3)."""
    s2 = np.minimum((np.asarray(rho) / radius) ** 2, 1.0)
    return amp * (1.0 - s2) ** 4


def _twist(amp: float, radius: float, center=(math.pi, math.pi)):
    """``(rho, theta) -> (rho, theta + w(rho))`` in polar coordinates about ``center``."""
    cx, cy = center

    def f(p, sgn):
        x, y = p[..., 0] - cx, p[..., 1] - cy
        w = sgn * twist_profile(np.hypot(x, y), amp, radius)
        c, s = np.cos(w), np.sin(w)
        return np.stack([cx + c * x - s * y, cy + s * x + c * y], axis=-1)

    return (lambda p: f(p, 1.0)), (lambda p: f(p, -1.0))


_BUILDERS = {
    "identity": _identity,
    "rotation": _rotation,
    "sine_shear": _sine_shear,
    "linear_shear": _linear_shear,
    "twist": _twist,
}


def linear_shear_sigma(s: float) -> float:
    """Largest singular value of ``[[1, s], [0, 1]]``."""
    return (abs(s) + math.sqrt(s * s + 4.0)) / 2.0


def linear_star(sigma: float) -> float:
    """Modulus of a linear map with singular values ``sigma >= 1`` and ``1/sigma``.

    Pair images range over ``[d/sigma, sigma d]``.  The supremum comes from
    the mixed branch, ``(1 + ln d)(1 + ln sigma - ln d)``, maximal at
    ``d = sqrt(sigma)``.
    """
    return (1.0 + 0.5 * math.log(sigma)) ** 2


def torus_zoo() -> list[MapZooEntry]:
    """Maps of the ``2 pi`` torus (planar lifts) used by the composition scenario."""
    c = (math.pi, math.pi)
    out = [
        MapZooEntry("identity", "identity", {}, 1.0),
        MapZooEntry("quarter-turn", "rotation", {"angle": math.pi / 2, "center": c}, 1.0),
    ]
    for a in (0.25, 1.0, 4.0, 16.0, 64.0, 200.0):
        out.append(MapZooEntry(f"shear-{a:g}", "sine_shear", {"amp": a}))
    for a in (1.0, 4.0, 16.0, 32.0):
        out.append(MapZooEntry(f"twist-{a:g}", "twist", {"amp": a, "radius": 2.5, "center": c}))
    return out


def plane_zoo() -> list[MapZooEntry]:
    """Maps with closed-form modulus, sampled on plane windows."""
    out = [
        MapZooEntry("identity", "identity", {}, 1.0),
        MapZooEntry("rotation-0.7", "rotation", {"angle": 0.7}, 1.0),
        MapZooEntry("rotation-pi/2", "rotation", {"angle": math.pi / 2}, 1.0),
    ]
    for s in (0.5, 2.0, 6.0):
        out.append(MapZooEntry(f"linear-shear-{s:g}", "linear_shear", {"s": s},
                               linear_star(linear_shear_sigma(s))))
    return out
