"""Initial vorticity fields used by tests, scenarios and scripts."""

from __future__ import annotations

import math

import numpy as np

from .fields import GridSpec, ScalarField2D, lbmo_example, sample_analytic
from .rng import stream


def taylor_green(spec: GridSpec, amp: float = 1.0) -> ScalarField2D:
    """``-2 sin x1 sin x2``: a steady solution whose velocity is ``(-sin x1 cos x2, cos x1 sin x2)``."""
    return sample_analytic(spec, lambda x, y: -2.0 * amp * np.sin(x) * np.sin(y))


def two_mode(spec: GridSpec) -> ScalarField2D:
    """Nonstationary smooth data: two Taylor-Green-type cells at different wavenumbers."""
    return sample_analytic(
        spec,
        lambda x, y: -2.0 * np.sin(x) * np.sin(y) + 0.8 * np.cos(2 * x + 0.3) * np.cos(y - 0.5),
    )


def random_smooth(spec: GridSpec, seed: int, kmax: int = 4, slope: float = 1.0,
                  amp: float = 1.0) -> ScalarField2D:
    """Mean-free random trigonometric polynomial with modes ``|k_i| <= kmax``.

    Coefficients are Gaussian scaled by ``|k|^-slope``; the result is
    normalized to max amplitude ``amp``.
    """
    rng = stream(seed, "random-smooth")
    X1, X2 = spec.mesh()
    w = np.zeros(spec.shape)
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 <= 0:
                continue
            a, b = rng.standard_normal(2)
            kk = math.hypot(k1, k2) ** -slope
            ph = k1 * X1 * (2 * np.pi / spec.lx) + k2 * X2 * (2 * np.pi / spec.ly)
            w += kk * (a * np.cos(ph) + b * np.sin(ph))
    w -= w.mean()
    return ScalarField2D(spec, amp * w / np.max(np.abs(w)))


def lbmo_bumps(spec: GridSpec, centers=None, amps=None) -> ScalarField2D:
    """Sum of copies of the unbounded ``ln(1 - ln|x|)`` bump, minus the mean.

    ``|x|`` is clamped at ``h/2`` so the nodes at the centers stay finite.
    """
    if centers is None:
        c = (spec.ox + spec.lx / 2, spec.oy + spec.ly / 2)
        centers = [(c[0] - 0.8, c[1]), (c[0] + 0.8, c[1])]
    amps = amps or [1.0] * len(centers)
    floor = spec.h / 2
    X1, X2 = spec.mesh()
    w = np.zeros(spec.shape)
    for (cx, cy), a in zip(centers, amps):
        w += a * lbmo_example(X1, X2, floor, center=(cx, cy))
    w -= w.mean()
    return ScalarField2D(spec, w)
