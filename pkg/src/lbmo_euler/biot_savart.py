"""Velocity from vorticity.

On the torus the stream function solves ``lap psi = omega`` and
``u = (-d2 psi, d1 psi)``; in Fourier variables
``u_hat = -i k_perp omega_hat / |k|^2`` with ``k_perp = (-k2, k1)`` for the
``exp(+i k.x)`` synthesis convention used by numpy/scipy.  The zero mode and
the Nyquist lines of the velocity are set to zero.

On a plane window the kernel ``K(x) = x_perp / (2 pi |x|^2)`` is summed with
midpoint quadrature.  That sum is a discrete linear convolution, evaluated
with zero-padded FFTs.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft
from scipy.signal import fftconvolve

from .fields import GridSpec, ScalarField2D, VectorField2D
from .parallel import threads

MAX_DIRECT_NODES = 256 * 256


class SpectralWorkspace:
    """Wavenumbers and symbols for one periodic grid (real FFT layout).

    Holds scratch state; use one workspace per worker.
    """

    def __init__(self, spec: GridSpec):
        if not spec.periodic:
            raise ValueError("spectral workspace needs a periodic grid")
        if not spec.is_pow2():
            raise ValueError(f"grid sizes must be powers of two, got {spec.nx}x{spec.ny}")
        self.spec = spec
        nx, ny = spec.nx, spec.ny
        self.kx_int = np.arange(nx // 2 + 1)
        self.ky_int = np.fft.fftfreq(ny, 1.0 / ny).astype(np.int64)
        kx = self.kx_int * (2 * np.pi / spec.lx)
        ky = self.ky_int * (2 * np.pi / spec.ly)
        self.k1 = np.broadcast_to(kx[None, :], (ny, nx // 2 + 1)).copy()
        self.k2 = np.broadcast_to(ky[:, None], (ny, nx // 2 + 1)).copy()
        self.ksq = self.k1**2 + self.k2**2
        nyq = (self.kx_int[None, :] == nx // 2) | (self.ky_int[:, None] == -(ny // 2))
        self.nyquist = np.broadcast_to(nyq, self.ksq.shape)
        # first-derivative symbols with the Nyquist lines removed
        self.d1 = np.where(self.nyquist, 0.0, 1j * self.k1)
        self.d2 = np.where(self.nyquist, 0.0, 1j * self.k2)
        inv = np.zeros_like(self.ksq)
        np.divide(1.0, self.ksq, out=inv, where=self.ksq > 0)
        self.inv_ksq = inv
        self.dealias_mask = (np.abs(self.kx_int)[None, :] < nx / 3.0) & (
            np.abs(self.ky_int)[:, None] < ny / 3.0
        )
        self.workers = threads()

    def fft(self, a: np.ndarray) -> np.ndarray:
        return sfft.rfft2(a, workers=self.workers)

    def ifft(self, a_hat: np.ndarray) -> np.ndarray:
        return sfft.irfft2(a_hat, s=self.spec.shape, workers=self.workers)

    def velocity_hat(self, w_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        psi_hat = -w_hat * self.inv_ksq
        return -self.d2 * psi_hat, self.d1 * psi_hat


def _check_mean_free(omega: ScalarField2D) -> None:
    scale = float(np.max(np.abs(omega.values)))
    m = omega.mean()
    if abs(m) > 1e-12 * scale:
        raise ValueError(
            f"vorticity has nonzero mean {m:.3e}; torus Biot-Savart needs zero total vorticity"
        )


def velocity_from_vorticity_torus(omega: ScalarField2D, ws: SpectralWorkspace | None = None) -> VectorField2D:
    ws = ws or SpectralWorkspace(omega.grid)
    if ws.spec != omega.grid:
        raise ValueError("workspace grid does not match the field grid")
    _check_mean_free(omega)
    u1h, u2h = ws.velocity_hat(ws.fft(omega.values))
    return VectorField2D(omega.grid, ws.ifft(u1h), ws.ifft(u2h))


def upsample(u: VectorField2D, factor: int) -> VectorField2D:
    """Trigonometric interpolation of a periodic field onto a ``factor``-times finer grid.

    Used to hand the bilinear flow integrator velocity samples whose
    interpolation error is ``factor^2`` times smaller.
    """
    g = u.grid
    if factor == 1:
        return u
    fine = GridSpec(g.nx * factor, g.ny * factor, g.lx, g.ly, g.ox, g.oy, periodic=True)
    ws = SpectralWorkspace(g)
    out = []
    for comp in (u.u1, u.u2):
        ch = np.where(ws.nyquist, 0.0, ws.fft(comp))
        pad = np.zeros((fine.ny, fine.nx // 2 + 1), dtype=complex)
        h = g.ny // 2
        pad[:h, : g.nx // 2 + 1] = ch[:h]
        pad[-h:, : g.nx // 2 + 1] = ch[-h:]
        out.append(sfft.irfft2(pad, s=fine.shape, workers=ws.workers) * (factor * factor))
    return VectorField2D(fine, out[0], out[1])


def spectral_divergence(u: VectorField2D, ws: SpectralWorkspace) -> np.ndarray:
    return ws.ifft(ws.d1 * ws.fft(u.u1) + ws.d2 * ws.fft(u.u2))


def spectral_curl(u: VectorField2D, ws: SpectralWorkspace) -> np.ndarray:
    return ws.ifft(ws.d1 * ws.fft(u.u2) - ws.d2 * ws.fft(u.u1))


def velocity_residuals(u: VectorField2D, omega: ScalarField2D, ws: SpectralWorkspace) -> tuple[float, float]:
    """(max|div u| / max|u|, max|curl u - omega'| / max|omega'|).

    ``omega'`` is ``omega`` with its mean and Nyquist lines removed, the part
    of the vorticity a real velocity field on this grid can carry.
    """
    umax = max(float(np.max(np.abs(u.u1))), float(np.max(np.abs(u.u2))), 1e-300)
    div = float(np.max(np.abs(spectral_divergence(u, ws)))) / umax
    wh = ws.fft(omega.values)
    wh = np.where(ws.nyquist | (ws.ksq == 0), 0.0, wh)
    w_ref = ws.ifft(wh)
    wmax = max(float(np.max(np.abs(w_ref))), 1e-300)
    curl = float(np.max(np.abs(spectral_curl(u, ws) - w_ref))) / wmax
    return div, curl


def _rfft_weights(spec: GridSpec) -> np.ndarray:
    """Multiplicity of each rfft column in a full-spectrum Parseval sum."""
    w = np.full(spec.nx // 2 + 1, 2.0)
    w[0] = 1.0
    if spec.nx % 2 == 0:
        w[-1] = 1.0
    return w[None, :]


def energy_spectral(u: VectorField2D, ws: SpectralWorkspace) -> float:
    """``sum_k |u_hat(k)|^2`` over the full (unnormalized) spectrum."""
    w = _rfft_weights(ws.spec)
    a, b = ws.fft(u.u1), ws.fft(u.u2)
    return float(np.sum(w * (np.abs(a) ** 2 + np.abs(b) ** 2)))


def enstrophy_weighted(omega: ScalarField2D, ws: SpectralWorkspace) -> float:
    """``sum_{k != 0} |omega_hat(k)|^2 / |k|^2`` with Nyquist lines excluded."""
    w = _rfft_weights(ws.spec)
    wh = ws.fft(omega.values)
    keep = ~ws.nyquist
    return float(np.sum((w * np.abs(wh) ** 2 * ws.inv_ksq)[keep]))


# ---------------------------------------------------------------- plane kernel


def kernel_lattice(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """``K`` sampled on all lattice offsets, shape ``(2ny-1, 2nx-1)``, zero at the origin."""
    a = np.arange(-(spec.nx - 1), spec.nx) * spec.hx
    b = np.arange(-(spec.ny - 1), spec.ny) * spec.hy
    X1, X2 = np.meshgrid(a, b)
    r2 = X1**2 + X2**2
    r2[spec.ny - 1, spec.nx - 1] = 1.0
    k1 = -X2 / (2 * np.pi * r2)
    k2 = X1 / (2 * np.pi * r2)
    k1[spec.ny - 1, spec.nx - 1] = 0.0
    k2[spec.ny - 1, spec.nx - 1] = 0.0
    return k1, k2


def velocity_from_vorticity_direct(omega: ScalarField2D) -> VectorField2D:
    """Midpoint quadrature of ``u = K * omega`` for compactly supported data.

    The singular self term is dropped.
    """
    g = omega.grid
    if g.nx * g.ny > MAX_DIRECT_NODES:
        raise ValueError(f"direct quadrature limited to {MAX_DIRECT_NODES} nodes, got {g.nx * g.ny}")
    w = omega.values
    thresh = 1e-14 * float(np.max(np.abs(w)))
    edge = np.concatenate([w[0], w[-1], w[:, 0], w[:, -1]])
    if np.any(np.abs(edge) > thresh):
        raise ValueError("vorticity support touches the window edge")
    k1, k2 = kernel_lattice(g)
    area = g.cell_area
    u1 = fftconvolve(w, k1, mode="same") * area
    u2 = fftconvolve(w, k2, mode="same") * area
    return VectorField2D(g, u1, u2)
