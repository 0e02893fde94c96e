"""Pulsed Gaussian beam in free space: spectra, paraxial field and pulse area."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .stack import TransitionSpec, effective_dipole, sigma_nuc
from .units import C_LIGHT, EPS0, HBAR

#: sqrt(8 sqrt(ln 2) / sqrt(pi)), prefactor of chi_sigma
CHI_PREFACTOR = math.sqrt(8 * math.sqrt(math.log(2)) / math.sqrt(math.pi))


class BeamError(ConfigError):
    """Inconsistent or incomplete beam parameters."""


@dataclass(frozen=True)
class BeamSpec:
    """Fourier-limited pulsed Gaussian beam.

    Give exactly one of `w0` / `theta_div` and exactly one of the pulse
    pairs ``(n_photons, tau)`` / ``(pulse_energy, rel_bandwidth)``; the
    missing members are derived on construction.

    Parameters
    ----------
    omega : float
        Carrier angular frequency (rad/s).
    theta_in : float
        Grazing angle between beam axis and cavity plane (rad).
    w0, theta_div : float
        Waist (m) or divergence (rad), ``w0 = 2 / (k theta_div)``.
    n_photons, tau : float
        Photon number and Gaussian duration parameter (s).
    pulse_energy, rel_bandwidth : float
        Pulse energy (J) and relative FWHM bandwidth.
    focus : tuple of float
        Focus position in cavity coordinates (m).
    alignment : float
        Cosine between dipole and polarisation direction.
    """

    omega: float
    theta_in: float
    w0: float | None = None
    theta_div: float | None = None
    n_photons: float | None = None
    tau: float | None = None
    pulse_energy: float | None = None
    rel_bandwidth: float | None = None
    focus: tuple = (0.0, 0.0, 0.0)
    alignment: float = 1.0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if not self.omega > 0:
            raise BeamError("omega must be positive")
        k = self.omega / C_LIGHT
        if (self.w0 is None) == (self.theta_div is None):
            raise BeamError("give exactly one of w0 / theta_div")
        if self.w0 is None:
            if not self.theta_div > 0:
                raise BeamError("theta_div must be positive")
            set_("w0", 2.0 / (k * self.theta_div))
        else:
            if not self.w0 > 0:
                raise BeamError("w0 must be positive")
            set_("theta_div", 2.0 / (k * self.w0))
        if self.w0 < 10 * 2 * math.pi / k:
            warnings.warn("waist below 10 wavelengths: paraxial normalisation is unreliable", stacklevel=3)

        pair_a = self.n_photons is not None or self.tau is not None
        pair_b = self.pulse_energy is not None or self.rel_bandwidth is not None
        if pair_a == pair_b:
            raise BeamError("give exactly one of (n_photons, tau) or (pulse_energy, rel_bandwidth)")
        ew = HBAR * self.omega
        if pair_a:
            if self.n_photons is None or self.tau is None:
                raise BeamError("n_photons and tau must be given together")
            if self.n_photons < 0 or not self.tau > 0:
                raise BeamError("need n_photons >= 0 and tau > 0")
            set_("pulse_energy", self.n_photons * ew)
            set_("rel_bandwidth", math.sqrt(math.log(2)) / (self.tau * self.omega))
        else:
            if self.pulse_energy is None or self.rel_bandwidth is None:
                raise BeamError("pulse_energy and rel_bandwidth must be given together")
            if self.pulse_energy < 0 or not self.rel_bandwidth > 0:
                raise BeamError("need pulse_energy >= 0 and rel_bandwidth > 0")
            set_("n_photons", self.pulse_energy / ew)
            set_("tau", math.sqrt(math.log(2)) / (self.rel_bandwidth * self.omega))
        set_("focus", tuple(float(f) for f in self.focus))
        if len(self.focus) != 3:
            raise BeamError("focus must be a 3-vector")

    @property
    def k(self) -> float:
        return self.omega / C_LIGHT

    @property
    def rayleigh_length(self) -> float:
        return self.k * self.w0**2 / 2

    def with_divergence(self, theta_div):
        return BeamSpec(self.omega, self.theta_in, theta_div=theta_div, n_photons=self.n_photons,
                        tau=self.tau, focus=self.focus, alignment=self.alignment)

    def with_photons(self, n_photons):
        return BeamSpec(self.omega, self.theta_in, w0=self.w0, n_photons=n_photons, tau=self.tau,
                        focus=self.focus, alignment=self.alignment)


@dataclass(frozen=True)
class SpectralEnvelope:
    """``A(w) = A0 / (2 pi) exp(-tau^2 (w - w_c)^2 / 2)``; `A0` is the focus peak."""

    A0: complex
    tau: float
    omega_carrier: float

    def __call__(self, omega):
        return self.A0 / (2 * math.pi) * np.exp(-0.5 * self.tau**2 * (np.asarray(omega) - self.omega_carrier) ** 2)

    def time_domain(self, t):
        """``A(t) = int dw exp(-i w t) A(w)``; the free-space focus field is ``2 pi A(t)``."""
        t = np.asarray(t, dtype=float)
        return (self.A0 / (self.tau * math.sqrt(2 * math.pi)) * np.exp(-(t**2) / (2 * self.tau**2))
                * np.exp(-1j * self.omega_carrier * t))


def normalize_amplitude(spec: BeamSpec) -> SpectralEnvelope:
    """Peak amplitude fixed by the photon number (real, zero phase at focus)."""
    a0 = math.sqrt(2 * spec.n_photons * HBAR * spec.omega * spec.tau
                   / (math.pi**2 * math.sqrt(math.pi) * EPS0 * spec.w0**2 * C_LIGHT))
    return SpectralEnvelope(a0, spec.tau, spec.omega)


def angular_spectrum_pulse_frame(spec: BeamSpec, k_perp, z_p, omega, envelope=None):
    """Angular spectrum of the beam in pulse coordinates at distance `z_p` from focus."""
    k_perp = np.asarray(k_perp, dtype=float)
    kp2 = np.sum(k_perp**2, axis=-1)
    k = omega / C_LIGHT
    if np.any(kp2 > k * k):
        raise ValueError("transverse wave vector off-shell")
    env = normalize_amplitude(spec) if envelope is None else envelope
    kz = np.sqrt(k * k - kp2)
    return env(omega) * spec.w0**2 / 2 * np.exp(-spec.w0**2 * kp2 / 4) * np.exp(1j * z_p * kz)


def paraxial_field(spec: BeamSpec, r_p, omega, envelope=None):
    """Paraxial Gaussian beam at pulse-frame position(s) ``r_p[..., 3]``."""
    r_p = np.asarray(r_p, dtype=float)
    x, y, z = r_p[..., 0], r_p[..., 1], r_p[..., 2]
    k = omega / C_LIGHT
    w0 = spec.w0
    zr = k * w0**2 / 2
    w = w0 * np.sqrt(1 + (z / zr) ** 2)
    rho2 = x**2 + y**2
    gouy = np.arctan(z / zr)
    # exp(i k rho^2 / 2R) with 1/R = z / (z^2 + zr^2): finite at the focus
    curv = k * rho2 * z / (2 * (z**2 + zr**2))
    env = normalize_amplitude(spec) if envelope is None else envelope
    return (2 * math.pi * env(omega) * (w0 / w) * np.exp(1j * k * z) * np.exp(-rho2 / w**2)
            * np.exp(-1j * gouy) * np.exp(1j * curv))


def peak_pulse_area(spec: BeamSpec, t: TransitionSpec) -> float:
    """Total pulse area at the free-space focus."""
    d = effective_dipole(t) * spec.alignment
    return 2 * math.pi / HBAR * abs(d * normalize_amplitude(spec).A0)


def peak_pulse_area_closed_form(spec: BeamSpec, t: TransitionSpec) -> float:
    d = effective_dipole(t) * spec.alignment
    return math.sqrt(8 * spec.n_photons * spec.omega * spec.tau * d**2
                     / (math.sqrt(math.pi) * spec.w0**2 * C_LIGHT * HBAR * EPS0))


def chi_sigma(t: TransitionSpec) -> float:
    """Source-independent factor of the pulse area (m / sqrt(J))."""
    return CHI_PREFACTOR * math.sqrt(sigma_nuc(t) / (HBAR * t.omega_nuc))


def chi_source(pulse_energy: float, rel_bandwidth: float) -> float:
    """sqrt(J); essentially the root of the photon number per bandwidth."""
    return math.sqrt(pulse_energy / rel_bandwidth)


def chi_source_from_photons(n_photons, tau, omega) -> float:
    ew = HBAR * omega
    return math.sqrt(ew * n_photons * omega * tau / math.sqrt(math.log(2)))


def chi_source_necessary(w0: float, t: TransitionSpec) -> float:
    """chi_source needed for a pi pulse at the focus of a beam with waist `w0`."""
    return math.pi * w0 / chi_sigma(t)


def pulse_area_from_chi(w0, t: TransitionSpec, chi_src) -> float:
    return chi_sigma(t) / w0 * chi_src
