"""Physical constants, unit parsing and the shared phasor/Fourier conventions.

Conventions used across the package:

* SI units internally; angles in radians.
* Complex phasor notation: the physical field is ``Re[E~(r, t)]``.
* Time/frequency transform pair::

      E(w) = 1/(2 pi) * int dt exp(+i w t) E(t)
      E(t) = int dw exp(-i w t) E(w)

* Angular spectra: ``E(r_par) = int d^2k exp(i k.r_par) E(k)`` with no extra
  prefactor, so the free-space Gaussian focus amplitude is ``2 pi A(w)``.
* Cavity coordinates: ``z = 0`` at the top (vacuum/cladding) interface,
  ``z`` increasing downward into the stack, beam travelling along ``+x``.
* Global phase reference: zero phase at the focus on the beam axis.
"""
from __future__ import annotations

import re

from scipy import constants as _c

from .errors import ConfigError

HBAR = _c.hbar
C_LIGHT = _c.c
EPS0 = _c.epsilon_0
EV = _c.electron_volt

_LENGTH = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "μm": 1e-6, "nm": 1e-9, "pm": 1e-12, "a": 1e-10}
_ENERGY = {"ev": 1.0, "kev": 1e3, "mev": 1e-3, "uev": 1e-6, "nev": 1e-9}
_ANGLE = {"rad": 1.0, "mrad": 1e-3, "urad": 1e-6, "μrad": 1e-6, "deg": 0.017453292519943295}
_JOULE = {"j": 1.0, "mj": 1e-3, "uj": 1e-6, "μj": 1e-6, "nj": 1e-9}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}

_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*)?$")


class UnitError(ConfigError):
    """Raised when a quantity string cannot be interpreted."""


def _parse(text, table, default, kind, case_sensitive=False):
    if isinstance(text, (int, float)):
        return float(text) * table[default]
    m = _QTY.match(str(text))
    if m is None:
        raise UnitError(f"malformed {kind} {text!r}")
    value = float(m.group(1))
    unit = (m.group(2) or default).strip()
    key = unit if case_sensitive else unit.lower()
    if key not in table:
        raise UnitError(f"unknown {kind} unit {unit!r} in {text!r}")
    return value * table[key]


def parse_length(text, default="nm"):
    """Length in metres from e.g. ``"2.5 nm"``; bare numbers use `default`."""
    return _parse(text, _LENGTH, default, "length")


def parse_energy_ev(text, default="ev"):
    """Energy in eV from e.g. ``"14.4125 keV"`` or ``"4.66 neV"``."""
    m = _QTY.match(str(text))
    # 'meV' vs 'MeV' are the only case clash that matters here
    if m is not None and m.group(2) and m.group(2).strip() == "MeV":
        return float(m.group(1)) * 1e6
    return _parse(text, _ENERGY, default, "energy")


def parse_angle(text, default="mrad"):
    return _parse(text, _ANGLE, default, "angle")


def parse_time(text, default="s"):
    return _parse(text, _TIME, default, "time")


def parse_pulse_energy(text, default="j"):
    """Pulse energy in joules from e.g. ``"0.5 mJ"``."""
    return _parse(text, _JOULE, default, "pulse energy")


def ev_to_omega(energy_ev):
    """Angular frequency (rad/s) of a photon of the given energy in eV."""
    return energy_ev * EV / HBAR


def omega_to_ev(omega):
    return omega * HBAR / EV


def wavenumber(omega):
    return omega / C_LIGHT
