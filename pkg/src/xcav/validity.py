"""Order-of-magnitude checks on the excitation model: pulse depletion,
photon budget and a synchrotron count-rate estimate.

The numerical thresholds are policy choices, exposed as arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .beam import BeamSpec, chi_sigma, chi_source
from .errors import ConfigError, NumericalError
from .stack import TransitionSpec, effective_dipole
from .units import C_LIGHT, EPS0, HBAR, ev_to_omega


class GeometryError(NumericalError):
    """Singular beam/sample geometry."""


class RegimeError(NumericalError):
    """Inputs outside the low-excitation regime the estimate assumes."""


@dataclass(frozen=True)
class DepletionReport:
    b_sigma_product: float
    time_picture_attenuation: float
    frequency_attenuation: float
    verdict: str
    threshold: float

    def as_dict(self) -> dict:
        return {"b_sigma": self.b_sigma_product,
                "time_attenuation": self.time_picture_attenuation,
                "frequency_attenuation": self.frequency_attenuation,
                "depletion_verdict": self.verdict}


def depletion_report(b, sigma_pulse, gamma_rate, threshold=1e-3, marginal=1e-1) -> DepletionReport:
    """Leading-order pulse depletion in the time and frequency pictures.

    Parameters
    ----------
    b : float
        Resonant absorption rate parameter ``b(z)`` (1/s).
    sigma_pulse : float
        Pulse duration parameter (s).
    gamma_rate : float
        Transition linewidth as a rate (1/s).
    threshold, marginal : float
        ``b sigma`` below `threshold` passes, below `marginal` is marginal.

    Notes
    -----
    The linearised time-picture factor ``1 - sqrt(pi/2) b sigma`` is only
    meaningful while it is close to one.
    """
    if b < 0 or not sigma_pulse > 0 or not gamma_rate > 0:
        raise ConfigError("need b >= 0, sigma_pulse > 0 and gamma_rate > 0")
    bs = b * sigma_pulse
    verdict = "pass" if bs < threshold else "marginal" if bs < marginal else "fail"
    return DepletionReport(bs, 1 - math.sqrt(math.pi / 2) * bs, math.exp(-b / gamma_rate), verdict, threshold)


@dataclass(frozen=True)
class InversionBudget:
    N_required: float
    N_absorbed: float
    ratio: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ratio > self.threshold

    def as_dict(self) -> dict:
        return {"N_required": self.N_required, "N_absorbed": self.N_absorbed,
                "budget_ratio": self.ratio, "budget_verdict": "pass" if self.passed else "fail"}


def required_photons(spec: BeamSpec, t: TransitionSpec) -> float:
    """Photons in the pulse for a pi pulse at the free-space focus."""
    d = effective_dipole(t) * spec.alignment
    return (math.sqrt(math.pi) * math.pi**2 / 8 * C_LIGHT * EPS0 * HBAR * spec.w0**2
            / (t.omega_nuc * spec.tau * d**2))


def inversion_budget(spec: BeamSpec, t: TransitionSpec, t_res, rho_res, threshold=1e3) -> InversionBudget:
    """Photons needed for a pi pulse against resonant nuclei in the footprint.

    Parameters
    ----------
    t_res : float
        Resonant layer thickness (m).
    rho_res : float
        Resonant nucleus density (1/m^3).
    """
    if not t_res > 0 or rho_res < 0:
        raise ConfigError("need t_res > 0 and rho_res >= 0")
    s = math.sin(spec.theta_in)
    if s <= 0:
        raise GeometryError("grazing angle must be positive: the footprint diverges at theta_in = 0")
    n_req = required_photons(spec, t)
    n_abs = math.pi * spec.w0**2 * t_res * rho_res / s
    ratio = math.inf if n_abs == 0 else n_req / n_abs
    return InversionBudget(n_req, n_abs, ratio, threshold)


@dataclass(frozen=True)
class SynchrotronEstimate:
    pulse_energy: float
    rel_bandwidth: float
    chi_sigma: float
    chi_source: float
    pulse_area: float
    N_exc: float
    N_det: float

    def as_dict(self) -> dict:
        return {"pulse_energy_J": self.pulse_energy, "rel_bandwidth": self.rel_bandwidth,
                "chi_sigma": self.chi_sigma, "chi_source": self.chi_source,
                "pulse_area": self.pulse_area, "N_exc": self.N_exc, "N_det": self.N_det}


def synchrotron_benchmark(flux, bandwidth, photon_energy, pulse_spacing, w0, target_thickness, rho,
                          t: TransitionSpec, efficiency=1.0, phi_max=0.1) -> SynchrotronEstimate:
    """Excited and detected resonant events per pulse in the weak-excitation limit.

    Parameters
    ----------
    flux : float
        Average photon flux (photons/s).
    bandwidth, photon_energy : float
        Monochromator bandwidth and photon energy (eV).
    pulse_spacing : float
        Time between pulses (s).
    w0 : float
        Beam waist (m); drops out of the excitation count.
    target_thickness, rho : float
        Resonant target thickness (m) and nucleus density (1/m^3).
    efficiency : float
        Detection efficiency on top of the internal-conversion loss.
    """
    if flux < 0 or not bandwidth > 0 or not photon_energy > 0 or not pulse_spacing > 0 or not w0 > 0:
        raise ConfigError("flux must be >= 0 and bandwidth, energy, spacing, w0 positive")
    if not 0 <= efficiency <= 1:
        raise ConfigError("detection efficiency must lie in [0, 1]")
    energy = flux * pulse_spacing * ev_to_omega(photon_energy) * HBAR
    b_r = bandwidth / photon_energy
    cs, cx = chi_sigma(t), chi_source(energy, b_r)
    phi = cs / w0 * cx
    if phi >= phi_max:
        raise RegimeError(f"pulse area {phi:.3g} >= {phi_max}: not in the low-excitation regime")
    n_exc = phi**2 / 2 * target_thickness * math.pi * w0**2 * rho
    n_det = n_exc * efficiency / (1 + t.alpha_ic)
    return SynchrotronEstimate(energy, b_r, cs, cx, phi, n_exc, n_det)

