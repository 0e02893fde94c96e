"""scikit-learn style wrappers around the functional core.

The physics has no training step, so ``fit`` only validates parameters and
precomputes grids or responses. Parameters are plain constructor arguments
and so work with ``get_params``/``set_params`` and ``clone``.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .beam import BeamSpec
from .cavity import StackResponse
from .errors import ConfigError
from .excitation import pulse_area_from_field, pulse_area_from_phasor
from .rotation import beam_grid, cavity_angular_spectrum
from .stack import LayerStack, TransitionSpec, effective_dipole
from .synthesis import FieldMap, ResponseCache, collimated_field, synthesize_field
from .units import C_LIGHT, ev_to_omega

# ---------------------------------------------------------------- validation


def check_stack(stack) -> LayerStack:
    if not isinstance(stack, LayerStack):
        raise ConfigError(f"expected a LayerStack, got {type(stack).__name__}")
    return stack


def check_beam(beam) -> BeamSpec:
    if not isinstance(beam, BeamSpec):
        raise ConfigError(f"expected a BeamSpec, got {type(beam).__name__}")
    return beam


def check_transition(t) -> TransitionSpec:
    if not isinstance(t, TransitionSpec):
        raise ConfigError(f"expected a TransitionSpec, got {type(t).__name__}")
    return t


def check_depths(X) -> np.ndarray:
    """Depths as a finite 1D float array from shape ``(n,)`` or ``(n, 1)``."""
    z = np.asarray(X, dtype=float)
    if z.ndim == 2 and z.shape[1] == 1:
        z = z[:, 0]
    if z.ndim != 1 or z.size == 0:
        raise ConfigError("depths must be a non-empty 1D array or a single column")
    if not np.all(np.isfinite(z)):
        raise ConfigError("depths must be finite")
    return z


def check_features(X, n_features) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and n_features == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ConfigError(f"expected an array of shape (n_samples, {n_features}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ConfigError("input contains NaN or infinity")
    return X


def check_field(E) -> np.ndarray:
    E = np.asarray(E)
    if not np.all(np.isfinite(E)):
        raise ConfigError("field contains NaN or infinity")
    return E.astype(complex)


# ---------------------------------------------------------------- estimators


class ModeFunctionRegressor(BaseEstimator):
    """Mode function of a stack as a point-wise model.

    ``predict`` maps rows ``(theta_in [rad], z [m])`` to the complex field
    per unit incident plane wave.

    Parameters
    ----------
    stack : LayerStack
    photon_energy : float, optional
        eV; defaults to the stack's tabulation energy.
    """

    def __init__(self, stack=None, photon_energy=None):
        self.stack = stack
        self.photon_energy = photon_energy

    def fit(self, X=None, y=None):
        stack = check_stack(self.stack)
        energy = stack.photon_energy if self.photon_energy is None else float(self.photon_energy)
        if not energy > 0:
            raise ConfigError("photon_energy must be positive")
        self.omega_ = ev_to_omega(energy)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "omega_")
        X = check_features(X, 2)
        theta, z = X[:, 0], X[:, 1]
        if np.any(theta <= 0) or np.any(theta >= math.pi / 2):
            raise ConfigError("grazing angles must lie in (0, pi/2)")
        k = self.omega_ / C_LIGHT
        resp = StackResponse(self.stack, (k * np.sin(theta)) ** 2, self.omega_)
        out = np.empty(len(X), dtype=complex)
        for zz in np.unique(z):
            sel = z == zz
            out[sel] = resp.field(zz)[sel]
        return out

    def reflectivity(self, theta):
        check_is_fitted(self, "omega_")
        theta = np.asarray(theta, dtype=float)
        k = self.omega_ / C_LIGHT
        return np.abs(StackResponse(self.stack, (k * np.sin(theta)) ** 2, self.omega_).reflectivity) ** 2


class CavityFieldSynthesizer(BaseEstimator, TransformerMixin):
    """Depths -> complex field along ``x`` at ``y = 0`` for a fixed beam and stack.

    ``fit`` builds the k-grid and the cavity angular spectrum; ``transform``
    takes depths of shape ``(n,)`` or ``(n, 1)`` and returns ``(n, nx)``
    complex values on the grid ``x_``.
    """

    def __init__(self, stack=None, beam=None, n=1024, n_sigma=6.0, x_step=None, collimated=False,
                 workers=None):
        self.stack = stack
        self.beam = beam
        self.n = n
        self.n_sigma = n_sigma
        self.x_step = x_step
        self.collimated = collimated
        self.workers = workers

    def fit(self, X=None, y=None):
        check_stack(self.stack)
        beam = check_beam(self.beam)
        if int(self.n) < 8:
            raise ConfigError("n must be >= 8")
        self.grid_ = beam_grid(beam, n=int(self.n), n_sigma=self.n_sigma, x_step=self.x_step)
        self.spectrum_ = cavity_angular_spectrum(beam, self.grid_)
        self.x_ = self.grid_.x
        self._cache = ResponseCache()
        return self

    def field_map(self, X) -> FieldMap:
        check_is_fitted(self, "grid_")
        z = check_depths(X)
        if self.collimated:
            return collimated_field(self.beam, self.stack, z, grid=self.grid_, workers=self.workers)
        return synthesize_field(self.spectrum_, self.stack, z, cache=self._cache, workers=self.workers)

    def transform(self, X):
        return self.field_map(X).values


class InversionTransformer(BaseEstimator, TransformerMixin):
    """Resonant field amplitudes -> final inversion ``sigma_z = -cos(Phi)``.

    Parameters
    ----------
    transition : TransitionSpec
    alignment : float
        Dipole/polarisation cosine.
    amplitude : {"phasor", "physical"}
        Convention of the input amplitudes (see :mod:`xcav.excitation`).
    """

    def __init__(self, transition=None, alignment=1.0, amplitude="phasor"):
        self.transition = transition
        self.alignment = alignment
        self.amplitude = amplitude

    def fit(self, X=None, y=None):
        t = check_transition(self.transition)
        if self.amplitude not in ("phasor", "physical"):
            raise ConfigError("amplitude must be 'phasor' or 'physical'")
        self.dipole_ = effective_dipole(t) * float(self.alignment)
        return self

    def pulse_area(self, X):
        check_is_fitted(self, "dipole_")
        E = check_field(X)
        if self.amplitude == "phasor":
            return pulse_area_from_phasor(E, self.dipole_)
        return pulse_area_from_field(E, self.dipole_)

    def transform(self, X):
        return -np.cos(self.pulse_area(X))
