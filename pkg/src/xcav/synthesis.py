"""Real-space field synthesis: cavity angular spectrum x mode functions -> one 2D FFT per depth."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import NumericalError
from .beam import BeamSpec
from .cavity import StackResponse, mode_function
from .grids import KGrid
from .rotation import RIM_EPS, CavityAngularSpectrum, beam_grid, cavity_angular_spectrum
from .stack import LayerStack, StackError
from .units import C_LIGHT

log = logging.getLogger(__name__)


class GridWarning(UserWarning):
    """k-grid may be too coarse for the cavity response."""


class ValidityError(NumericalError):
    """An approximation's precondition is not met."""


@dataclass
class FieldMap:
    """Complex phasor field ``E~(r, omega)`` on a real-space grid.

    `values` has shape ``(nz, nx)`` (slice at ``y = y[0]``) or ``(nz, ny, nx)``.
    `reference` is the free-space focus amplitude of the same input pulse.
    """

    values: np.ndarray
    x: np.ndarray
    z: np.ndarray
    omega: float
    reference: float
    y: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def intensity(self) -> np.ndarray:
        """``|E|^2`` normalised to the free-space focus peak."""
        return np.abs(self.values) ** 2 / self.reference**2

    def z_index(self, z, atol=1e-13) -> int:
        i = int(np.argmin(np.abs(self.z - z)))
        if abs(self.z[i] - z) > atol:
            raise ValueError(f"depth {z} not in field map")
        return i

    def slice_y0(self) -> np.ndarray:
        if self.values.ndim == 2:
            return self.values
        j = int(np.argmin(np.abs(self.y)))
        return self.values[:, j, :]

    def crop(self, x_range) -> "FieldMap":
        lo, hi = x_range
        sel = (self.x >= lo) & (self.x <= hi)
        if not sel.any():
            raise ValueError("empty x window")
        return FieldMap(self.values[..., sel], self.x[sel], self.z, self.omega, self.reference,
                        self.y, dict(self.meta))


def _axis_phases(k0, dk, n, c):
    """Pre-FFT twiddle and post-FFT carrier for one axis of the centred grid."""
    p = np.arange(n)
    pre = np.exp(1j * p * dk * c) * np.exp(-2j * math.pi * p * (n // 2) / n)
    x = c + (2 * math.pi / (n * dk)) * (p - n // 2)
    post = np.exp(1j * k0 * x)
    return pre, post


class _Synthesizer:
    """Inverse transform ``sum_k exp(i k.r) S(k) dkx dky`` on a fixed grid."""

    def __init__(self, grid: KGrid, workers=None):
        self.grid = grid
        self.workers = workers
        self.pre_x, self.post_x = _axis_phases(grid.kx0, grid.dkx, grid.nx, grid.xc)
        self.pre_y, self.post_y = _axis_phases(grid.ky0, grid.dky, grid.ny, grid.yc)
        self.scale = grid.nx * grid.ny * grid.dkx * grid.dky

    def plane(self, s):
        g = self.pre_y[:, None] * s * self.pre_x[None, :]
        out = sfft.ifft2(g, workers=self.workers)
        return out * self.scale * self.post_y[:, None] * self.post_x[None, :]

    def row_y0(self, s):
        # row y = yc of the 2D inverse DFT equals the 1D inverse DFT of the
        # ky-weighted column sum
        j = self.grid.ny // 2
        wy = self.pre_y * np.exp(2j * math.pi * np.arange(self.grid.ny) * j / self.grid.ny)
        col = wy @ s
        out = sfft.ifft(col * self.pre_x, workers=self.workers)
        return out * (self.scale / self.grid.ny) * self.post_y[j] * self.post_x


class ResponseCache:
    """Read-only cache of :class:`StackResponse` per (stack, grid, omega)."""

    def __init__(self):
        self._store = {}

    def get(self, stack, grid: KGrid, omega, mask, kz2):
        key = (stack, grid, float(omega))
        resp = self._store.get(key)
        if resp is None:
            resp = StackResponse(stack, np.where(mask, kz2, 0.0), omega)
            self._store[key] = resp
        return resp

    def clear(self):
        self._store.clear()


def check_ridge_sampling(integrand, support):
    """Largest neighbour-to-neighbour jump of ``|M S|`` along ``k_x`` within
    `support`, relative to its peak there. Values of order one mean the
    integrand (usually the guided-mode ridge) is under-sampled."""
    a = np.abs(integrand)
    both = support[:, 1:] & support[:, :-1]
    if not both.any():
        return 0.0
    peak = a[support].max()
    return float(np.abs(np.diff(a, axis=1))[both].max() / peak) if peak > 0 else 0.0


def synthesize_field(spectrum: CavityAngularSpectrum, stack: LayerStack, z_list, omega=None,
                     keep_y=False, cache: ResponseCache | None = None, workers=None,
                     check_grid=True, ridge_limit=0.5) -> FieldMap:
    """Field inside and around the stack for an incident angular spectrum.

    For each depth ``z`` evaluates
    ``E(x, y, z) = sum exp(i k_par.r_par) M(z, k_par) E_in(k_par) dkx dky``
    with ``M`` the stack mode function.
    """
    omega = spectrum.omega if omega is None else omega
    grid = spectrum.grid
    z_arr = np.atleast_1d(np.asarray(z_list, dtype=float))
    k = omega / C_LIGHT
    kz2 = grid.kz2(k)
    mask = spectrum.mask
    resp = (cache.get(stack, grid, omega, mask, kz2) if cache is not None
            else StackResponse(stack, np.where(mask, kz2, 0.0), omega))
    syn = _Synthesizer(grid, workers)
    s_in = spectrum.values
    if keep_y:
        out = np.empty((len(z_arr), grid.ny, grid.nx), dtype=complex)
    else:
        out = np.empty((len(z_arr), grid.nx), dtype=complex)
    amp = np.abs(s_in)
    support = mask & (amp >= 1e-3 * amp.max()) if check_grid else None
    worst = 0.0
    for i, z in enumerate(z_arr):
        m = np.where(mask, resp.field(z), 0)
        prod = m * s_in
        if check_grid:
            worst = max(worst, check_ridge_sampling(prod, support))
        out[i] = syn.plane(prod) if keep_y else syn.row_y0(prod)
    if worst > ridge_limit:
        warnings.warn(
            f"integrand jump of {worst:.2f} x peak between neighbouring k_x cells; "
            "refine the grid to resolve the guided-mode ridge", GridWarning, stacklevel=2)
    return FieldMap(out, grid.x, z_arr, omega, spectrum.reference,
                    grid.y if keep_y else np.array([grid.yc]),
                    {"theta_in": spectrum.theta_in, "nx": grid.nx, "ny": grid.ny,
                     "ridge_jump": worst})


def collimated_field(spec: BeamSpec, stack: LayerStack, z_list, omega=None, grid: KGrid | None = None,
                     keep_y=False, tol=0.01, weight_floor=1e-3, workers=None) -> FieldMap:
    """Collimated shortcut: mode function at the central in-plane wave vector
    times the free-space envelope in the ``z = 0`` plane.

    Raises :class:`ValidityError` when the spectrally weighted RMS deviation of
    the mode function from its central value exceeds `tol` (relative to the
    largest central value along the profile).
    """
    omega = spec.omega if omega is None else omega
    grid = beam_grid(spec, omega=omega) if grid is None else grid
    spectrum = cavity_angular_spectrum(spec, grid, omega)
    z_arr = np.atleast_1d(np.asarray(z_list, dtype=float))
    k = omega / C_LIGHT
    k_in = np.array([k * math.cos(spec.theta_in), 0.0])
    centre = mode_function(stack, z_arr, k_in, omega)

    mask = spectrum.mask
    amp = np.abs(spectrum.values)
    support = mask & (amp >= weight_floor * amp.max())
    w = amp[support] ** 2
    w = w / w.sum()
    sub = StackResponse(stack, grid.kz2(k)[support], omega)
    # spectral-weight RMS deviation, relative to the largest |M| on the profile
    scale = np.abs(centre).max()
    variation = 0.0
    for z, c0 in zip(z_arr, centre):
        dev = np.sqrt(np.sum(w * np.abs(sub.field(z) - c0) ** 2))
        variation = max(variation, float(dev / scale))
    if variation > tol:
        raise ValidityError(
            f"mode function varies by {variation:.3g} (> {tol}) over the beam spectrum; "
            "use synthesize_field")

    syn = _Synthesizer(grid, workers)
    env = syn.plane(spectrum.values) if keep_y else syn.row_y0(spectrum.values)
    values = centre[:, None, None] * env[None] if keep_y else centre[:, None] * env[None, :]
    return FieldMap(values, grid.x, z_arr, omega, spectrum.reference,
                    grid.y if keep_y else np.array([grid.yc]),
                    {"theta_in": spec.theta_in, "collimated": True, "variation": variation})


def enhancement_factor(field_map: FieldMap, stack: LayerStack, beam: BeamSpec | None = None,
                       which: int = 0) -> float:
    """Peak ``|E|`` at the resonant layer centre over the free-space focus peak."""
    if not stack.resonant_indices:
        raise StackError("enhancement factor needs a resonant layer")
    zc = stack.resonant_center(which)
    i = field_map.z_index(zc, atol=1e-12)
    return float(np.abs(field_map.values[i]).max() / field_map.reference)


def resonant_enhancement(beam: BeamSpec, stack: LayerStack, grid: KGrid | None = None,
                         collimated=False, which=0, **kw) -> float:
    """Convenience: synthesise at the resonant-layer centre and return the enhancement."""
    zc = stack.resonant_center(which)
    if collimated:
        fm = collimated_field(beam, stack, [zc], grid=grid, **kw)
    else:
        grid = beam_grid(beam) if grid is None else grid
        fm = synthesize_field(cavity_angular_spectrum(beam, grid), stack, [zc], **kw)
    return enhancement_factor(fm, stack, beam, which)


def field_scan_divergence(spec: BeamSpec, stack: LayerStack, theta_div_list, z_list,
                          n=1024, x_range=None, shared_grid=False, workers=None, n_sigma=6.0,
                          x_step=None) -> list[FieldMap]:
    """Field maps for several divergences.

    With `shared_grid` one k-grid sized for the largest divergence serves all
    items and the stack response is computed once; otherwise each item gets
    its own grid, which resolves narrow spectra better at the same `n`.
    """
    theta_div_list = [float(t) for t in theta_div_list]
    if not theta_div_list:
        return []
    grid = None
    cache = ResponseCache() if shared_grid else None
    if shared_grid:
        base = spec.with_divergence(theta_div_list[0])
        grid = beam_grid(base, n=n, n_sigma=n_sigma, theta_div_max=max(theta_div_list), x_step=x_step)
    maps = []
    for td in theta_div_list:
        beam = spec.with_divergence(td)
        g = grid if shared_grid else beam_grid(beam, n=n, n_sigma=n_sigma, x_step=x_step)
        fm = synthesize_field(cavity_angular_spectrum(beam, g), stack, z_list, cache=cache, workers=workers)
        fm.meta["theta_div"] = td
        maps.append(fm.crop(x_range) if x_range is not None else fm)
    return maps
