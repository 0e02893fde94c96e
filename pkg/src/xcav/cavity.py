"""s-polarised plane-wave response of a layer stack (Parratt recursion).

The mode function is the complex field at depth ``z`` for a unit-amplitude
s-polarised plane wave incident from the top layer. Inside layer ``j`` it is
``A_j exp(i kz_j s) + B_j exp(-i kz_j s)`` with ``s`` the distance below the
layer's upper boundary; in the top layer it is ``exp(i kz z) + r exp(-i kz z)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import argrelmin

from .errors import NumericalError
from .grids import AngularSpectrumGrid, KGrid
from .stack import LayerStack
from .units import C_LIGHT


class DomainError(NumericalError):
    """Wave vector outside the propagating (on-shell) region of the top layer."""


def branch_sqrt(x):
    """Square root with ``Im >= 0`` (ties resolved by ``Re >= 0``)."""
    s = np.sqrt(np.asarray(x, dtype=complex))
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real < 0))
    return np.where(flip, -s, s)


def fresnel_s(kz_above, kz_below):
    """s-polarisation Fresnel reflection ``(kz1 - kz2) / (kz1 + kz2)``."""
    kz_above = np.asarray(kz_above, dtype=complex)
    kz_below = np.asarray(kz_below, dtype=complex)
    denom = kz_above + kz_below
    if np.any((kz_above == 0) & (kz_below == 0)):
        raise DomainError("degenerate interface: both normal wave numbers are zero")
    r = (kz_above - kz_below) / denom
    return r[()] if r.ndim == 0 else r


def _fresnel_masked(a, b):
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (a - b) / (a + b)
    return np.where((a == 0) & (b == 0), 0.0, r)


class StackResponse:
    """Per-layer wave numbers and amplitudes for a batch of in-plane wave vectors.

    Parameters
    ----------
    stack : LayerStack
    kz2_vac : array_like
        ``k^2 - |k_par|^2`` in vacuum for each sample (any shape).
    omega : float
        Angular frequency (rad/s).

    Notes
    -----
    The layer wave numbers are built as ``kz2_vac + (n_j^2 - 1) k^2`` so the
    small deviation of ``n_j`` from unity is not lost against ``k^2``.
    """

    def __init__(self, stack: LayerStack, kz2_vac, omega: float):
        self.stack = stack
        self.omega = float(omega)
        kz2_vac = np.asarray(kz2_vac, dtype=float)
        self.shape = kz2_vac.shape
        k2 = (self.omega / C_LIGHT) ** 2
        dn2 = stack.n2_minus_1
        t = stack.thicknesses
        nl = len(stack)
        kz = np.empty((nl,) + self.shape, dtype=complex)
        for j in range(nl):
            kz[j] = branch_sqrt(kz2_vac + dn2[j] * k2)
        self.kz = kz

        # Parratt recursion from the substrate upwards; R[j] refers to
        # interface j (between layers j and j+1) seen from layer j
        R = np.zeros((nl - 1,) + self.shape, dtype=complex)
        rs = np.empty_like(R)
        below = np.zeros(self.shape, dtype=complex)  # R_{j+1} P_{j+1}
        for j in range(nl - 2, -1, -1):
            rs[j] = _fresnel_masked(kz[j], kz[j + 1])
            R[j] = (rs[j] + below) / (1 + rs[j] * below)
            if j >= 1:
                below = R[j] * np.exp(2j * kz[j] * t[j])
        self.R = R

        A = np.empty((nl,) + self.shape, dtype=complex)
        B = np.zeros((nl,) + self.shape, dtype=complex)
        A[0] = 1.0
        B[0] = R[0]
        for j in range(nl - 1):
            a_bottom = A[j] if j == 0 else A[j] * np.exp(1j * kz[j] * t[j])
            if j + 1 < nl - 1:
                x = R[j + 1] * np.exp(2j * kz[j + 1] * t[j + 1])
            else:
                x = 0.0
            A[j + 1] = a_bottom * (1 + rs[j]) / (1 + rs[j] * x)
            if j + 1 < nl - 1:
                B[j + 1] = A[j + 1] * x
        self.A = A
        self.B = B

    @property
    def reflectivity(self):
        """Complex reflection amplitude of the whole stack at ``z = 0``."""
        return self.R[0]

    def field(self, z):
        """Mode function at a scalar depth `z` for every sample."""
        j, s = self.stack.locate(z)
        j = int(j)
        s = float(s)
        kz = self.kz[j]
        return self.A[j] * np.exp(1j * kz * s) + self.B[j] * np.exp(-1j * kz * s)


def _kz2_from_kpar(k_par, omega):
    k_par = np.asarray(k_par, dtype=float)
    k = omega / C_LIGHT
    kp2 = float(np.sum(k_par**2))
    return k * k - kp2


def _check_on_shell(stack, kz2_vac, omega):
    k2 = (omega / C_LIGHT) ** 2
    top = kz2_vac + (stack.n2_minus_1[0] * k2).real
    if top < 0:
        raise DomainError("in-plane wave vector exceeds the top-layer wave number")


def parratt_reflectivity(stack: LayerStack, k_par, omega: float) -> complex:
    """Complex reflection coefficient of the stack for one in-plane wave vector."""
    kz2 = _kz2_from_kpar(k_par, omega)
    _check_on_shell(stack, kz2, omega)
    return complex(StackResponse(stack, kz2, omega).reflectivity)


def mode_function(stack: LayerStack, z, k_par, omega: float):
    """Field at depth(s) `z` per unit incident s-polarised plane wave."""
    kz2 = _kz2_from_kpar(k_par, omega)
    _check_on_shell(stack, kz2, omega)
    resp = StackResponse(stack, kz2, omega)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.array([complex(resp.field(zi)) for zi in z_arr])
    return out[0] if np.ndim(z) == 0 else out.reshape(np.shape(z))


def k_par_from_angle(theta, omega):
    """In-plane wave vector along ``x`` for grazing angle `theta` in vacuum."""
    return np.array([omega / C_LIGHT * np.cos(theta), 0.0])


@dataclass
class RockingCurve:
    """``|r|^2`` over grazing angles; `amplitude` keeps the complex ``r``."""

    angles: np.ndarray
    reflectivity: np.ndarray
    omega: float
    amplitude: np.ndarray | None = None

    def minima(self, stack: LayerStack | None = None):
        """Grazing angles (rad) of local reflectivity minima.

        With `stack` given, each grid minimum is polished by a bounded scalar
        minimisation of ``|r|^2``.
        """
        idx = argrelmin(self.reflectivity)[0]
        out = []
        for i in idx:
            a = float(self.angles[i])
            if stack is not None:
                lo, hi = self.angles[i - 1], self.angles[i + 1]
                res = minimize_scalar(
                    lambda th: abs(parratt_reflectivity(stack, k_par_from_angle(th, self.omega), self.omega)) ** 2,
                    bounds=(lo, hi), method="bounded", options={"xatol": 1e-12},
                )
                a = float(res.x)
            out.append(a)
        return np.array(out)


def rocking_curve(stack: LayerStack, omega: float, theta_grid) -> RockingCurve:
    """``|r(theta)|^2`` over grazing angles, with ``k_par = (w/c) cos(theta)``."""
    theta = np.asarray(theta_grid, dtype=float)
    k = omega / C_LIGHT
    kz2 = (k * np.sin(theta)) ** 2
    r = StackResponse(stack, kz2, omega).reflectivity
    return RockingCurve(theta, np.abs(r) ** 2, omega, r)


def first_minimum(stack: LayerStack, omega: float, lo=0.5e-3, hi=20e-3, n=4001) -> float:
    """Angle of the lowest-angle rocking-curve minimum (rad)."""
    curve = rocking_curve(stack, omega, np.linspace(lo, hi, n))
    mins = curve.minima(stack)
    if len(mins) == 0:
        raise NumericalError("no rocking-curve minimum in range")
    return float(mins[0])


def mode_function_grid(stack: LayerStack, z: float, k_grid: KGrid, omega: float,
                       response: StackResponse | None = None, rim_eps: float = 0.0) -> AngularSpectrumGrid:
    """Mode function sampled over a k-grid at one depth.

    Off-shell cells (``kx^2 + ky^2 >= k^2``, or within `rim_eps`·k of the rim)
    are zeroed and flagged invalid in the returned mask.
    """
    k = omega / C_LIGHT
    kz2 = k_grid.kz2(k)
    mask = kz2 > (rim_eps * k) ** 2
    if response is None:
        response = StackResponse(stack, np.where(mask, kz2, 0.0), omega)
    values = np.where(mask, response.field(z), 0)
    return AngularSpectrumGrid(values, k_grid, mask, {"z": z, "omega": omega, "kind": "mode_function"})
