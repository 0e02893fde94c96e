"""Focused x-ray pulses in planar thin-film cavities and the excitation of
embedded narrow two-level resonances."""

__version__ = "0.1.0"

from .beam import (BeamSpec, SpectralEnvelope, chi_sigma, chi_source, chi_source_necessary,
                   normalize_amplitude, paraxial_field, peak_pulse_area)
from .cavity import (RockingCurve, StackResponse, first_minimum, mode_function, mode_function_grid,
                     parratt_reflectivity, rocking_curve)
from .config import RunConfig, load_config, parse_config, parse_stack, serialize_stack
from .errors import ConfigError, GridFormatError, NumericalError
from .excitation import (BlochState, InversionMap, area_theorem_state, bloch_ode_solve, inversion_map,
                         pulse_area_from_field, pulse_area_from_phasor)
from .grids import AngularSpectrumGrid, KGrid
from .gridio import read_grid, write_grid
from .rotation import beam_grid, cavity_angular_spectrum, f_delta, i_tilde, rotate_wavevector
from .stack import FE57, Layer, LayerStack, MaterialIndex, TransitionSpec, effective_dipole, sigma0, sigma_nuc
from .synthesis import (FieldMap, collimated_field, enhancement_factor, field_scan_divergence,
                        resonant_enhancement, synthesize_field)
from .validity import depletion_report, inversion_budget, synchrotron_benchmark

__all__ = [
    "AngularSpectrumGrid", "BeamSpec", "BlochState", "ConfigError", "FE57", "FieldMap",
    "GridFormatError", "InversionMap", "KGrid", "Layer", "LayerStack", "MaterialIndex",
    "NumericalError", "RockingCurve", "RunConfig", "SpectralEnvelope", "StackResponse",
    "TransitionSpec", "area_theorem_state", "beam_grid", "bloch_ode_solve", "cavity_angular_spectrum",
    "chi_sigma", "chi_source", "chi_source_necessary", "collimated_field", "depletion_report",
    "effective_dipole", "enhancement_factor", "f_delta", "field_scan_divergence", "first_minimum",
    "i_tilde", "inversion_budget", "inversion_map", "load_config", "mode_function", "mode_function_grid",
    "normalize_amplitude", "paraxial_field", "parratt_reflectivity", "parse_config", "parse_stack",
    "peak_pulse_area", "pulse_area_from_field", "pulse_area_from_phasor", "read_grid",
    "resonant_enhancement", "rocking_curve", "rotate_wavevector", "serialize_stack", "sigma0",
    "sigma_nuc", "synchrotron_benchmark", "synthesize_field", "write_grid",
]
