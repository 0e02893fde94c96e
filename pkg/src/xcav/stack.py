"""Layer-stack and two-level transition data model."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .units import C_LIGHT, EPS0, EV, HBAR, ev_to_omega


class StackError(ConfigError):
    """Invalid layer stack or transition definition."""


@dataclass(frozen=True)
class MaterialIndex:
    """Refractive index ``n = 1 - delta + i beta`` at a stated photon energy."""

    delta: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.beta)):
            raise StackError("refractive index components must be finite")
        if self.beta < 0:
            raise StackError(f"beta must be >= 0 (got {self.beta})")
        if abs(self.delta) >= 1e-2:
            warnings.warn(
                f"|delta| = {abs(self.delta):.3g} is large for hard x-rays", stacklevel=3
            )

    @property
    def n(self) -> complex:
        return complex(1.0 - self.delta, self.beta)

    @property
    def n2_minus_1(self) -> complex:
        # (n - 1)(n + 1) keeps the tiny deviation from vacuum exact
        dn = complex(-self.delta, self.beta)
        return dn * (2.0 + dn)

    @property
    def is_vacuum(self) -> bool:
        return self.delta == 0.0 and self.beta == 0.0


VACUUM = MaterialIndex(0.0, 0.0)


@dataclass(frozen=True)
class Layer:
    name: str
    thickness: float | None
    material: MaterialIndex = VACUUM
    resonant: bool = False

    @property
    def semi_infinite(self) -> bool:
        return self.thickness is None


@dataclass(frozen=True)
class LayerStack:
    """Ordered top-to-bottom list of layers.

    The first and last layers are semi-infinite. Depth ``z = 0`` is the
    interface between the first layer and the second, with ``z`` growing
    into the stack.
    """

    layers: tuple[Layer, ...]
    photon_energy: float = 14412.5  # eV, energy at which indices are tabulated

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 2:
            raise StackError("a stack needs at least two layers")
        if not layers[0].semi_infinite:
            raise StackError(f"top layer {layers[0].name!r} must be semi-infinite")
        if not layers[-1].semi_infinite:
            raise StackError(f"bottom layer {layers[-1].name!r} must be semi-infinite")
        for i, layer in enumerate(layers[1:-1], start=1):
            if layer.semi_infinite:
                raise StackError(f"interior layer {i} ({layer.name!r}) cannot be semi-infinite")
            if not (layer.thickness > 0 and math.isfinite(layer.thickness)):
                raise StackError(
                    f"layer {i} ({layer.name!r}) has non-positive thickness {layer.thickness}"
                )
        if self.photon_energy <= 0:
            raise StackError("photon energy must be positive")

    @classmethod
    def from_layers(cls, spec, photon_energy=14412.5):
        """Build from ``(name, thickness_m_or_None, delta, beta[, resonant])`` tuples."""
        layers = []
        for item in spec:
            name, thickness, delta, beta, *rest = item
            layers.append(Layer(name, thickness, MaterialIndex(delta, beta), bool(rest and rest[0])))
        return cls(tuple(layers), photon_energy)

    def __len__(self):
        return len(self.layers)

    @property
    def thicknesses(self) -> np.ndarray:
        """Layer thicknesses with zeros for the two semi-infinite layers."""
        return np.array([0.0 if l.thickness is None else l.thickness for l in self.layers])

    @property
    def interfaces(self) -> np.ndarray:
        """Depths of the ``len(self) - 1`` interfaces, starting at 0."""
        return np.concatenate([[0.0], np.cumsum(self.thicknesses[1:-1])])

    @property
    def total_thickness(self) -> float:
        return float(self.interfaces[-1])

    @property
    def n2_minus_1(self) -> np.ndarray:
        return np.array([l.material.n2_minus_1 for l in self.layers])

    def layer_top(self, j: int) -> float:
        """Depth of the upper boundary of layer `j` (``-inf`` for the top layer)."""
        return -math.inf if j == 0 else float(self.interfaces[j - 1])

    def locate(self, z):
        """Map global depth(s) to ``(layer_index, offset_from_layer_top)``.

        Points exactly on an interface belong to the layer below it. The top
        layer offset is measured from ``z = 0`` (negative above the surface).
        """
        z = np.asarray(z, dtype=float)
        idx = np.searchsorted(self.interfaces, z, side="right")
        tops = np.concatenate([[0.0], self.interfaces])
        return idx, z - tops[idx]

    def depth(self, j, offset):
        """Inverse of :meth:`locate`."""
        tops = np.concatenate([[0.0], self.interfaces])
        return tops[np.asarray(j)] + np.asarray(offset, dtype=float)

    @property
    def resonant_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if l.resonant]

    def resonant_center(self, which: int = 0) -> float:
        """Depth of the centre of the `which`-th resonant layer."""
        idx = self.resonant_indices
        if not idx:
            raise StackError("stack has no resonant layer")
        j = idx[which]
        if self.layers[j].semi_infinite:
            raise StackError("a semi-infinite layer cannot be the resonant layer")
        return self.layer_top(j) + 0.5 * self.layers[j].thickness

    def vacuum_limit(self) -> "LayerStack":
        """Same geometry with every index set to unity (free-space benchmark)."""
        return replace(self, layers=tuple(replace(l, material=VACUUM) for l in self.layers))


@dataclass(frozen=True)
class TransitionSpec:
    """Narrow two-level resonance.

    Parameters
    ----------
    omega_nuc : float
        Transition angular frequency (rad/s).
    gamma : float
        Natural linewidth (eV).
    alpha_ic : float
        Internal-conversion coefficient.
    spin_g, spin_e : float
        Ground and excited state spins.
    """

    omega_nuc: float
    gamma: float
    alpha_ic: float = 0.0
    spin_g: float = 0.5
    spin_e: float = 1.5
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.omega_nuc > 0:
            raise StackError("transition frequency must be positive")
        if not self.gamma > 0:
            raise StackError("linewidth gamma must be positive")
        if self.alpha_ic < 0:
            raise StackError("internal conversion coefficient must be >= 0")
        for s in (self.spin_g, self.spin_e):
            mult = 2 * s + 1
            if mult < 1 or abs(mult - round(mult)) > 1e-12:
                raise StackError(f"spin {s} does not give a positive integer multiplicity")

    @classmethod
    def from_energy(cls, energy_ev, gamma_ev, alpha_ic=0.0, spin_g=0.5, spin_e=1.5, name=""):
        return cls(ev_to_omega(energy_ev), gamma_ev, alpha_ic, spin_g, spin_e, name)

    @property
    def energy_ev(self) -> float:
        return self.omega_nuc * HBAR / EV

    @property
    def k0(self) -> float:
        return self.omega_nuc / C_LIGHT

    @property
    def gamma_rate(self) -> float:
        """Linewidth as an angular rate (1/s)."""
        return self.gamma * EV / HBAR

    @property
    def lifetime(self) -> float:
        return HBAR / (self.gamma * EV)

    @property
    def degeneracy_ratio(self) -> float:
        return (2 * self.spin_e + 1) / (2 * self.spin_g + 1)


FE57 = TransitionSpec.from_energy(14412.5, 4.66e-9, alpha_ic=8.6, spin_g=0.5, spin_e=1.5, name="57Fe")


def sigma0(t: TransitionSpec) -> float:
    """Resonant absorption cross-section (m^2)."""
    return 2 * math.pi / ((1 + t.alpha_ic) * t.k0**2) * t.degeneracy_ratio


def sigma_nuc(t: TransitionSpec) -> float:
    """Linewidth-weighted cross-section ``d^2 / (c hbar eps0)`` (m^2)."""
    k0 = t.omega_nuc / C_LIGHT
    ratio = (2 * t.spin_e + 1) / (2 * t.spin_g + 1)
    return 2 * math.pi * ratio * t.gamma_rate / ((1 + t.alpha_ic) * k0**2 * 2 * t.omega_nuc)


def effective_dipole(t: TransitionSpec) -> float:
    """Effective dipole moment (C m) reproducing the transition's linewidth."""
    return math.sqrt(sigma_nuc(t) * C_LIGHT * HBAR * EPS0)
