"""Gaussian pulse spectrum rotated from pulse into cavity coordinates.

The pulse propagates along its own ``z_p`` axis, tilted by the grazing angle
``theta_in`` against the cavity plane. Rotating the on-shell wave-space
spectrum and integrating out ``k_z`` with the single (downward) root gives a
closed-form angular spectrum over the cavity in-plane wave vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .beam import BeamSpec, SpectralEnvelope, normalize_amplitude
from .grids import AngularSpectrumGrid, KGrid
from .units import C_LIGHT

#: cells with kz < RIM_EPS * k are dropped (F_delta diverges at the rim)
RIM_EPS = 1e-6


class EmptySpectrumError(NumericalError):
    """The requested grid has no on-shell cell."""


def rotation_matrix(theta_in):
    """Matrix mapping cavity-frame vectors to pulse-frame vectors."""
    s, c = math.sin(theta_in), math.cos(theta_in)
    return np.array([[s, 0.0, -c], [0.0, 1.0, 0.0], [c, 0.0, s]])


def rotate_wavevector(k_c, theta_in):
    """Pulse-frame components of cavity-frame vector(s) ``k_c[..., 3]``."""
    k_c = np.asarray(k_c, dtype=float)
    s, c = math.sin(theta_in), math.cos(theta_in)
    kx, ky, kz = k_c[..., 0], k_c[..., 1], k_c[..., 2]
    return np.stack([kx * s - kz * c, ky, kx * c + kz * s], axis=-1)


def to_pulse_frame(r_c, theta_in, focus=(0.0, 0.0, 0.0)):
    """Positions relative to the focus, expressed in pulse coordinates."""
    r_c = np.asarray(r_c, dtype=float) - np.asarray(focus, dtype=float)
    return rotate_wavevector(r_c, theta_in)


def f_delta(kx, ky, kz, theta_in):
    """Jacobian factor ``|sin(theta) + kx cos(theta) / kz|`` of the single-root reduction."""
    kz = np.asarray(kz, dtype=float)
    if np.any(kz <= 0):
        raise ValueError("F_delta needs kz > 0 (rim singularity at kz = 0)")
    return np.abs(math.sin(theta_in) + np.asarray(kx) * math.cos(theta_in) / kz)


def i_tilde(kx, ky, kz, theta_in, w0):
    """Gaussian envelope of the rotated spectrum.

    The exponent bracket equals the squared transverse pulse-frame wave vector,
    ``(kx sin(theta) - kz cos(theta))^2 + ky^2``.
    """
    s, c = math.sin(theta_in), math.cos(theta_in)
    kpx = np.asarray(kx) * s - np.asarray(kz) * c
    return w0**2 / 2 * np.exp(-(w0**2) / 4 * (np.asarray(ky) ** 2 + kpx**2))


@dataclass
class CavityAngularSpectrum:
    spectrum: AngularSpectrumGrid
    theta_in: float
    omega: float
    focus: tuple
    reference: float  # free-space focus amplitude |2 pi A(omega)|

    @property
    def grid(self) -> KGrid:
        return self.spectrum.grid

    @property
    def values(self) -> np.ndarray:
        return self.spectrum.values

    @property
    def mask(self) -> np.ndarray:
        return self.spectrum.mask

    def scaled(self, factor) -> "CavityAngularSpectrum":
        return CavityAngularSpectrum(self.spectrum * factor, self.theta_in, self.omega,
                                     self.focus, abs(factor) * self.reference)


def cavity_angular_spectrum(spec: BeamSpec, k_grid: KGrid, omega: float | None = None,
                            envelope: SpectralEnvelope | None = None,
                            rim_eps: float = RIM_EPS) -> CavityAngularSpectrum:
    """Closed-form angular spectrum of the Gaussian pulse in cavity coordinates.

    Normalised so that ``int d^2k exp(i k.r) exp(i kz z) E_in`` reproduces the
    free-space beam, i.e. its focus value is ``2 pi A(omega)``. A displaced
    focus enters as the phase ``exp(-i k.focus)``.
    """
    omega = spec.omega if omega is None else omega
    env = normalize_amplitude(spec) if envelope is None else envelope
    k = omega / C_LIGHT
    kz2 = k_grid.kz2(k)
    mask = kz2 > (rim_eps * k) ** 2
    if not mask.any():
        raise EmptySpectrumError("k-grid lies entirely off-shell")
    kz = np.sqrt(np.where(mask, kz2, 1.0))
    kx = k_grid.kx[None, :]
    ky = k_grid.ky[:, None]
    amp = env(omega)
    values = amp * i_tilde(kx, ky, kz, spec.theta_in, spec.w0) * f_delta(kx, ky, kz, spec.theta_in)
    fx, fy, fz = spec.focus
    if fx or fy or fz:
        values = values * np.exp(-1j * (kx * fx + ky * fy + kz * fz))
    values = np.where(mask, values, 0).astype(complex)
    ref = abs(2 * math.pi * env(omega))
    grid = AngularSpectrumGrid(values, k_grid, mask, {"kind": "cavity_angular_spectrum"})
    return CavityAngularSpectrum(grid, spec.theta_in, omega, spec.focus, ref)


def _next_pow2(n):
    return 1 << max(1, int(math.ceil(math.log2(max(n, 2)))))


def beam_grid(spec: BeamSpec, n=1024, n_sigma=6.0, window=None, omega=None, center=(0.0, 0.0),
              theta_div_max=None, x_step=None) -> KGrid:
    """k-grid covering ``±n_sigma`` Gaussian widths of the rotated spectrum.

    Parameters
    ----------
    n : int or (int, int)
        Points along ``(k_x, k_y)`` when `window` is not given.
    window : (float, float), optional
        Real-space extent ``(L_x, L_y)`` (m). Fixes the k-spacing; the point
        counts are then raised to powers of two covering the spectrum.
    theta_div_max : float, optional
        Size the grid for this divergence instead (shared grids for scans).
    x_step : float, optional
        Largest acceptable real-space spacing along x (m). The k_x span is
        widened with empty cells when the spectrum alone is too narrow.
    """
    omega = spec.omega if omega is None else omega
    k = omega / C_LIGHT
    theta_div = spec.theta_div if theta_div_max is None else max(theta_div_max, spec.theta_div)
    w0 = 2 / (k * theta_div)
    sig = math.sqrt(2) / w0  # std of the amplitude Gaussian in the transverse pulse wave vector
    sig_a = sig / k
    a_lo = max(0.0, spec.theta_in - n_sigma * sig_a)
    a_hi = min(math.pi / 2, spec.theta_in + n_sigma * sig_a)
    kx_lo, kx_hi = k * math.cos(a_hi), k * math.cos(a_lo)
    span_x = kx_hi - kx_lo
    span_y = 2 * n_sigma * sig
    if x_step is not None:
        span_x = max(span_x, 2 * math.pi / x_step)
    nx, ny = (n, n) if np.isscalar(n) else n
    if window is None:
        return KGrid.centered(0.5 * (kx_lo + kx_hi), 0.0, span_x, span_y, nx, ny, *center)
    lx, ly = window
    dkx, dky = 2 * math.pi / lx, 2 * math.pi / ly
    nx = max(_next_pow2(span_x / dkx), 16)
    ny = max(_next_pow2(span_y / dky), 16)
    return KGrid.centered(0.5 * (kx_lo + kx_hi), 0.0, nx * dkx, ny * dky, nx, ny, *center)
