"""Excitation of two-level resonances: pulse-area theorem, Bloch ODE, inversion maps.

Two amplitude conventions meet here. Field maps carry the phasor ``E~``
whose real part is the physical field; its Fourier amplitude at the
resonance is twice the positive-frequency amplitude of the physical field.
:func:`pulse_area_from_field` takes the physical amplitude,
:func:`pulse_area_from_phasor` the phasor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .beam import BeamSpec
from .cavity import mode_function
from .errors import ConfigError, NumericalError
from .stack import LayerStack, TransitionSpec, effective_dipole
from .synthesis import FieldMap
from .units import C_LIGHT, HBAR


class IntegrationError(NumericalError):
    """The adaptive Bloch integrator gave up."""


@dataclass(frozen=True)
class BlochState:
    """Expectation values of a two-level system.

    Scalars or equally shaped arrays. `sigma_minus` is in the lab frame,
    i.e. it still oscillates at the transition frequency.
    """

    sigma_z: np.ndarray | float
    sigma_minus: np.ndarray | complex
    time: np.ndarray | float = 0.0

    def __post_init__(self):
        sz = np.asarray(self.sigma_z, dtype=float)
        if np.any(np.abs(sz) > 1 + 1e-9):
            raise NumericalError("sigma_z outside [-1, 1]")

    @property
    def sigma_plus(self):
        return np.conj(self.sigma_minus)

    @property
    def purity(self):
        """``sigma_z^2 + 4 |sigma_-|^2``; unity for pure states."""
        return np.asarray(self.sigma_z) ** 2 + 4 * np.abs(self.sigma_minus) ** 2


def pulse_area_from_field(E_res, d):
    """Total pulse area from the physical field's Fourier amplitude at resonance.

    Parameters
    ----------
    E_res : complex or array
        Positive-frequency Fourier amplitude ``E(r, omega_nuc)`` (V s / m).
    d : float
        Dipole moment projected on the polarisation (C m).
    """
    return 4 * math.pi / HBAR * np.abs(d * np.asarray(E_res))


def pulse_area_from_phasor(E_phasor, d):
    """Same as :func:`pulse_area_from_field` for a phasor amplitude (half of it)."""
    return pulse_area_from_field(0.5 * np.asarray(E_phasor), d)


def area_theorem_state(Phi, phi_n=0.0, omega_nuc=0.0, t=0.0) -> BlochState:
    """Closed-form state after a resonant constant-phase pulse from the ground state."""
    Phi = np.asarray(Phi, dtype=float)
    sz = -np.cos(Phi)
    sm = 0.5j * np.exp(-1j * omega_nuc * np.asarray(t)) * np.exp(1j * np.asarray(phi_n)) * np.sin(Phi)
    if sz.ndim == 0:
        return BlochState(float(sz), complex(sm), t)
    return BlochState(sz, sm, t)


@dataclass
class BlochTrajectory:
    """Sampled ODE solution; `sigma_minus` in the lab frame."""

    t: np.ndarray
    sigma_z: np.ndarray
    sigma_minus: np.ndarray
    omega_nuc: float
    nfev: int = 0

    @property
    def final(self) -> BlochState:
        return BlochState(float(self.sigma_z[-1]), complex(self.sigma_minus[-1]), float(self.t[-1]))

    @property
    def purity(self) -> np.ndarray:
        return self.sigma_z**2 + 4 * np.abs(self.sigma_minus) ** 2


def _rhs(omega_of_t):
    def f(t, y):
        s = y[0] + 1j * y[1]
        om = omega_of_t(t)
        ds = -1j * om * y[2]
        dz = (2j * om * np.conj(s) - 2j * np.conj(om) * s).real
        return [ds.real, ds.imag, dz]
    return f


def bloch_ode_solve(omega_nuc, Omega_t, t_grid, rtol=1e-11, atol=1e-13, method="DOP853",
                    max_step=None) -> BlochTrajectory:
    """Integrate the undamped Bloch equations in the frame rotating at `omega_nuc`.

    With ``s = sigma_- exp(i omega_nuc t)``::

        ds/dt       = -i Omega sigma_z
        dsigma_z/dt = 2 i (Omega s* - Omega* s)

    where ``Omega(t) = d.E~(t) / (2 hbar)`` is the slowly varying rotating-frame
    Rabi frequency, sampled on `t_grid` and interpolated linearly.

    Parameters
    ----------
    omega_nuc : float
        Transition frequency, only used to restore the lab-frame phase.
    Omega_t : array of complex
        Drive samples (rad/s).
    t_grid : array
        Increasing sample times (s); the state starts in the ground state at
        ``t_grid[0]``.
    max_step : float, optional
        Defaults to the smallest sample spacing so no drive feature is skipped.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    om = np.asarray(Omega_t, dtype=complex)
    if t_grid.ndim != 1 or t_grid.size < 2 or om.shape != t_grid.shape:
        raise ConfigError("Omega_t and t_grid must be 1D arrays of equal length >= 2")
    dt = np.diff(t_grid)
    if np.any(dt <= 0):
        raise ConfigError("t_grid must be strictly increasing")
    re, im = om.real.copy(), om.imag.copy()

    def omega_of_t(t):
        return np.interp(t, t_grid, re) + 1j * np.interp(t, t_grid, im)

    sol = solve_ivp(_rhs(omega_of_t), (t_grid[0], t_grid[-1]), [0.0, 0.0, -1.0], method=method,
                    t_eval=t_grid, rtol=rtol, atol=atol,
                    max_step=float(dt.min()) if max_step is None else max_step)
    if not sol.success:
        t_fail = sol.t[-1] if sol.t.size else t_grid[0]
        raise IntegrationError(f"Bloch integration failed at t = {t_fail:.6g} s "
                               f"after {sol.nfev} evaluations: {sol.message}")
    s = sol.y[0] + 1j * sol.y[1]
    lab = s * np.exp(-1j * omega_nuc * sol.t)
    return BlochTrajectory(sol.t, sol.y[2], lab, omega_nuc, sol.nfev)


def gaussian_drive(t_grid, area, tau, phase=0.0, detuning=0.0, t0=0.0):
    """Rotating-frame Rabi samples of a Gaussian pulse with total area `area`.

    ``|Omega| = area / (2 sqrt(2 pi) tau) exp(-(t - t0)^2 / (2 tau^2))`` so that
    ``int 2 |Omega| dt = area``; a detuning enters as ``exp(-i delta t)``.
    """
    t = np.asarray(t_grid, dtype=float)
    env = area / (2 * math.sqrt(2 * math.pi) * tau) * np.exp(-((t - t0) ** 2) / (2 * tau**2))
    return env * np.exp(1j * phase) * np.exp(-1j * detuning * (t - t0))


@dataclass
class InversionMap:
    """Final inversion ``sigma_z`` and pulse area on the sampled cells.

    `sigma_z`, `pulse_area` and `drive_phase` share the shape of the source
    field slice: ``(nz, nx)`` or ``(nz, ny, nx)``.
    """

    sigma_z: np.ndarray
    pulse_area: np.ndarray
    drive_phase: np.ndarray
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def peak_sigma_z(self) -> float:
        return float(self.sigma_z.max())

    @property
    def inverted_fraction(self) -> float:
        """Fraction of cells with ``sigma_z > 0``."""
        return float(np.mean(self.sigma_z > 0))

    @property
    def peak_pulse_area(self) -> float:
        return float(self.pulse_area.max())

    def summary(self) -> str:
        return (f"peak_sigma_z={self.peak_sigma_z:.6g} inverted_fraction={self.inverted_fraction:.6g} "
                f"peak_pulse_area={self.peak_pulse_area:.6g}")


def inversion_map(field_map: FieldMap, spec: BeamSpec, t: TransitionSpec, z=None,
                  rtol=1e-9) -> InversionMap:
    """Per-cell pulse area and ``sigma_z = -cos(Phi)`` from a resonant field map.

    Parameters
    ----------
    field_map : FieldMap
        Phasor field evaluated at the transition frequency.
    spec : BeamSpec
        Supplies the dipole-polarisation alignment.
    z : float or sequence, optional
        Depths to keep (default: all depths of the map).
    """
    if abs(field_map.omega - t.omega_nuc) > rtol * t.omega_nuc:
        raise ConfigError(
            f"field evaluated at {field_map.omega:.9g} rad/s, transition at {t.omega_nuc:.9g} rad/s")
    values = field_map.values
    z_axis = field_map.z
    if z is not None:
        idx = [field_map.z_index(zz, atol=1e-12) for zz in np.atleast_1d(z)]
        values = values[idx]
        z_axis = z_axis[idx]
    d = effective_dipole(t) * spec.alignment
    phi = pulse_area_from_phasor(values, d)
    sz = -np.cos(phi)
    return InversionMap(sz, phi, np.angle(values), field_map.x, z_axis,
                        field_map.y if values.ndim == 3 else None,
                        {"omega": field_map.omega, "alignment": spec.alignment,
                         "theta_in": spec.theta_in, "w0": spec.w0, "n_photons": spec.n_photons,
                         "transition": t.name})


def bandwidth_diagnostic(stack: LayerStack, spec: BeamSpec, z, n_bw=1.0) -> float:
    """Largest relative change of the mode function at ``omega +- n_bw / tau``.

    Small values support treating the cavity response as flat across the pulse
    spectrum; the pipeline does not model pulse reshaping when it is not.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    k_par = np.array([spec.k * math.cos(spec.theta_in), 0.0])
    base = mode_function(stack, z, k_par, spec.omega)
    scale = np.abs(base).max()
    worst = 0.0
    for sign in (-1.0, 1.0):
        om = spec.omega + sign * n_bw / spec.tau
        # same propagation direction at the shifted frequency
        kp = np.array([om / C_LIGHT * math.cos(spec.theta_in), 0.0])
        worst = max(worst, float(np.abs(mode_function(stack, z, kp, om) - base).max() / scale))
    return worst
