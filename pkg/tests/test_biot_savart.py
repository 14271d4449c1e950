from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lbmo_euler.biot_savart import (
    SpectralWorkspace,
    energy_spectral,
    enstrophy_weighted,
    upsample,
    velocity_from_vorticity_direct,
    velocity_from_vorticity_torus,
    velocity_residuals,
)
from lbmo_euler.experiments import kernel_conformance
from lbmo_euler.fields import GridSpec, ScalarField2D, VectorField2D, sample_analytic, sample_vector
from lbmo_euler.initial import random_smooth, taylor_green

SPEC = GridSpec(128, 128)
WS = SpectralWorkspace(SPEC)
X1, X2 = SPEC.mesh()


def _err(u, v1, v2):
    return max(np.max(np.abs(u.u1 - v1)), np.max(np.abs(u.u2 - v2)))


def test_zero_vorticity():
    u = velocity_from_vorticity_torus(ScalarField2D(SPEC, np.zeros(SPEC.shape)), WS)
    assert not u.u1.any() and not u.u2.any()


def test_single_mode():
    u = velocity_from_vorticity_torus(sample_analytic(SPEC, lambda x, y: np.cos(x)), WS)
    assert _err(u, 0.0, np.sin(X1)) <= 1e-12


def test_taylor_green():
    u = velocity_from_vorticity_torus(taylor_green(SPEC), WS)
    assert _err(u, -np.sin(X1) * np.cos(X2), np.cos(X1) * np.sin(X2)) <= 1e-12


def test_nonzero_mean_rejected():
    with pytest.raises(ValueError, match="mean"):
        velocity_from_vorticity_torus(sample_analytic(SPEC, lambda x, y: np.cos(x) + 0.1), WS)


@given(st.integers(0, 500), st.integers(0, 500), st.floats(-10, 10), st.floats(-10, 10))
def test_linearity(s1, s2, a, b):
    w1, w2 = random_smooth(SPEC, s1, kmax=6), random_smooth(SPEC, s2, kmax=6)
    u1, u2 = velocity_from_vorticity_torus(w1, WS), velocity_from_vorticity_torus(w2, WS)
    u = velocity_from_vorticity_torus(w1 * a + w2 * b, WS)
    scale = max(1.0, abs(a) + abs(b))
    assert _err(u, a * u1.u1 + b * u2.u1, a * u1.u2 + b * u2.u2) <= 1e-12 * scale


@given(st.integers(0, 500), st.integers(1, 16))
def test_divergence_curl_energy(seed, kmax):
    w = random_smooth(SPEC, seed, kmax=kmax)
    u = velocity_from_vorticity_torus(w, WS)
    div, curl = velocity_residuals(u, w, WS)
    assert div <= 1e-10 and curl <= 1e-10
    e1, e2 = energy_spectral(u, WS), enstrophy_weighted(w, WS)
    assert abs(e1 - e2) <= 1e-10 * e2
    assert abs(u.u1.mean()) < 1e-14 and abs(u.u2.mean()) < 1e-14


def test_rectangular_torus():
    g = GridSpec(64, 32, lx=4 * np.pi, ly=2 * np.pi)
    w = sample_analytic(g, lambda x, y: np.cos(x / 2))
    u = velocity_from_vorticity_torus(w)
    Y1, _ = g.mesh()
    # psi = -4 cos(x/2), u = (-d2 psi, d1 psi) = (0, 2 sin(x/2))
    assert _err(u, 0.0, 2 * np.sin(Y1 / 2)) <= 1e-12


def test_upsample_band_limited():
    u = sample_vector(SPEC, lambda x, y: (np.sin(3 * x) * np.cos(y), np.cos(5 * y) + np.sin(x + 2 * y)))
    fine = upsample(u, 4)
    assert fine.grid.shape == (512, 512)
    ref = sample_vector(fine.grid, lambda x, y: (np.sin(3 * x) * np.cos(y), np.cos(5 * y) + np.sin(x + 2 * y)))
    assert _err(fine, ref.u1, ref.u2) <= 1e-13
    assert np.max(np.abs(fine.u1[::4, ::4] - u.u1)) <= 1e-13


# ---------------------------------------------------------------- direct quadrature


WIN = GridSpec.window(128, -4.0, 4.0)


def _bump(a=0.5):
    return sample_analytic(WIN, lambda x, y: np.where(x * x + y * y < a * a,
                                                      np.cos(np.pi * np.hypot(x, y) / (2 * a)) ** 2, 0.0))


def test_direct_zero_and_errors():
    u = velocity_from_vorticity_direct(ScalarField2D(WIN, np.zeros(WIN.shape)))
    assert not u.u1.any() and not u.u2.any()
    edge = sample_analytic(WIN, lambda x, y: np.exp(-x * x))
    with pytest.raises(ValueError, match="window edge"):
        velocity_from_vorticity_direct(edge)
    big = GridSpec.window(512, -4.0, 4.0)
    with pytest.raises(ValueError, match="limited"):
        velocity_from_vorticity_direct(ScalarField2D(big, np.zeros(big.shape)))


def test_direct_far_field_circulation():
    w = _bump()
    u = velocity_from_vorticity_direct(w)
    m = float(np.sum(w.values)) * WIN.cell_area
    Y1, Y2 = WIN.mesh()
    rho = np.hypot(Y1, Y2)
    ring = np.abs(rho - 1.5) < WIN.h
    want = m / (2 * np.pi * rho[ring])
    assert np.max(np.abs(np.hypot(u.u1, u.u2)[ring] / want - 1)) <= 0.02
    # counterclockwise rotation for positive vorticity
    j, i = WIN.ny // 2, int(np.argmin(np.abs(WIN.x - 1.5)))
    assert u.u2[j, i] > 0


def test_kernel_conformance_table():
    tab = kernel_conformance(128)
    for r in tab.records():
        assert r["value"] <= r["tol"], r
