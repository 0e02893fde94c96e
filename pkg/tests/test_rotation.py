import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from xcav.grids import KGrid
from xcav.rotation import (EmptySpectrumError, beam_grid, cavity_angular_spectrum, f_delta, i_tilde,
                           rotate_wavevector, rotation_matrix, to_pulse_frame)
from xcav.units import C_LIGHT

from conftest import OMEGA, make_beam

K = OMEGA / C_LIGHT


def test_rotation_special_angles():
    v = np.array([1.0, 2.0, 3.0])
    assert np.allclose(rotate_wavevector(v, math.pi / 2), v, atol=1e-15)
    assert np.allclose(rotate_wavevector(v, 0.0), [-3.0, 2.0, 1.0])
    assert np.allclose(rotation_matrix(0.3) @ v, rotate_wavevector(v, 0.3))


def test_norm_preservation_million_vectors(rng):
    v = rng.normal(size=(1_000_000, 3)) * rng.uniform(1e-3, 1e11, size=(1_000_000, 1))
    theta = rng.uniform(0, math.pi / 2, size=8)
    n0 = np.linalg.norm(v, axis=1)
    worst = max(np.abs(np.linalg.norm(rotate_wavevector(v, t), axis=1) / n0 - 1).max() for t in theta)
    assert worst < 1e-12


def test_to_pulse_frame_origin_at_focus():
    r = to_pulse_frame([1.0, 2.0, 3.0], 0.2, focus=(1.0, 2.0, 3.0))
    assert np.allclose(r, 0.0)


def test_f_delta_values():
    assert f_delta(0.0, 0.0, 5.0, 0.3) == pytest.approx(math.sin(0.3))
    assert f_delta(7.0, 1.0, 2.0, math.pi / 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        f_delta(1.0, 0.0, 0.0, 0.1)


def _f(kz, kx, ky, theta, k):
    s, c = math.sin(theta), math.cos(theta)
    return math.sqrt(k * k - ky * ky - (kx * s - kz * c) ** 2) - kx * c - kz * s


@settings(max_examples=200)
@given(theta=st.floats(1e-3, 1.5), u=st.floats(-0.9, 0.9), v=st.floats(-0.3, 0.3))
def test_f_delta_matches_finite_difference(theta, u, v):
    # points well inside the shell (away from the kz -> 0 rim), near the beam direction
    k = 1.0
    alpha = theta * (1 + 0.5 * u)
    kx = k * math.cos(alpha)
    ky = v * k * math.sin(alpha)
    kz = math.sqrt(max(k * k - kx * kx - ky * ky, 0.0))
    if kz < 0.05 * k:
        return
    assert _f(kz, kx, ky, theta, k) == pytest.approx(0.0, abs=1e-12)
    h = 1e-5 * kz
    # fourth-order central difference
    d = (-_f(kz + 2 * h, kx, ky, theta, k) + 8 * _f(kz + h, kx, ky, theta, k)
         - 8 * _f(kz - h, kx, ky, theta, k) + _f(kz - 2 * h, kx, ky, theta, k)) / (12 * h)
    assert f_delta(kx, ky, kz, theta) == pytest.approx(1 / abs(d), rel=1e-6)


@settings(max_examples=100)
@given(kx=st.floats(-1, 1), ky=st.floats(-1, 1), kz=st.floats(0.01, 1), theta=st.floats(0, 1.57),
       w0=st.floats(0.1, 10))
def test_i_tilde_bracket_is_rotated_transverse_norm(kx, ky, kz, theta, w0):
    kp = rotate_wavevector(np.array([kx, ky, kz]), theta)
    expected = w0**2 / 2 * math.exp(-(w0**2) / 4 * (kp[0] ** 2 + kp[1] ** 2))
    assert i_tilde(kx, ky, kz, theta, w0) == pytest.approx(expected, rel=1e-12, abs=1e-300)
    s, c = math.sin(theta), math.cos(theta)
    literal = w0**2 / 2 * math.exp(-(w0**2) / 4 * (ky**2 + kx**2 * s * s + kz**2 * c * c - 2 * kx * kz * c * s))
    assert i_tilde(kx, ky, kz, theta, w0) == pytest.approx(literal, rel=1e-9, abs=1e-300)


def test_i_tilde_limits():
    assert i_tilde(0.3, 0.4, 0.5, math.pi / 2, 2.0) == pytest.approx(2.0 * math.exp(-(0.09 + 0.16)))
    theta = 0.2
    # beam-axis direction has zero transverse pulse wave vector
    assert i_tilde(math.cos(theta), 0.0, math.sin(theta), theta, 3.0) == pytest.approx(4.5)


@pytest.mark.parametrize("kx_frac, ky_frac", [(0.0, 0.0), (0.4, 0.0), (-0.5, 0.3), (0.2, -0.6)])
def test_single_root_reduction_brute_force(kx_frac, ky_frac):
    """Integrate a Gaussian-regularised delta(f(kz)) around the forward root."""
    theta, w0, k = 0.05, 40.0, 1.0
    sig = 2 / w0
    alpha = theta + kx_frac * sig
    kx = k * math.cos(alpha)
    ky = ky_frac * 0.3 * k * math.sin(alpha)
    kz_root = math.sqrt(k * k - kx * kx - ky * ky)
    F = f_delta(kx, ky, kz_root, theta)
    eps = 1e-6 / F

    def integrand(kz):
        fv = _f(kz, kx, ky, theta, k)
        kp = rotate_wavevector(np.array([kx, ky, kz]), theta)
        g = w0**2 / 2 * math.exp(-(w0**2) / 4 * (kp[0] ** 2 + kp[1] ** 2))
        return g * math.exp(-fv * fv / (2 * eps * eps)) / (math.sqrt(2 * math.pi) * eps)

    half = 12 * eps * F
    val, _ = integrate.quad(integrand, kz_root - half, kz_root + half, epsabs=0, epsrel=1e-11, limit=200)
    assert val == pytest.approx(i_tilde(kx, ky, kz_root, theta, w0) * F, rel=1e-5)


# --------------------------------------------------------------- spectrum


def test_empty_grid_raises():
    beam = make_beam()
    grid = KGrid.centered(2 * K, 0.0, 1e-3 * K, 1e-3 * K, 16, 16)
    with pytest.raises(EmptySpectrumError):
        cavity_angular_spectrum(beam, grid)


def test_off_shell_cells_masked_to_zero():
    beam = make_beam(theta_in=1e-3, theta_div=2e-3)
    grid = KGrid.centered(K, 0.0, 0.2e-3 * K, 0.2e-3 * K, 64, 64)
    spec = cavity_angular_spectrum(beam, grid)
    assert (~spec.mask).any() and spec.mask.any()
    assert np.all(spec.values[~spec.mask] == 0)
    assert np.all(np.isfinite(spec.values))
    assert np.all(grid.kz2(K)[spec.mask] > 0)


def test_plane_wave_limit():
    beam = make_beam(theta_div=1e-6)
    grid = beam_grid(beam, n=256)
    spec = cavity_angular_spectrum(beam, grid)
    j, i = np.unravel_index(np.argmax(np.abs(spec.values)), spec.values.shape)
    assert abs(grid.ky[j]) <= grid.dky
    # within a few per mille of the spectral width k theta_div
    assert abs(grid.kx[i] - K * math.cos(beam.theta_in)) < 3e-3 * K * beam.theta_in


def test_peak_displaced_from_incidence_angle():
    beam = make_beam(theta_div=1.1e-3)
    grid = beam_grid(beam, n=1024)
    spec = cavity_angular_spectrum(beam, grid)
    row = np.abs(spec.values[grid.ny // 2])
    kx_peak = grid.kx[np.argmax(row)]
    theta_peak = math.acos(kx_peak / K)
    width = beam.theta_div
    assert abs(theta_peak - beam.theta_in) > 0.02 * width
    # the rotated profile is asymmetric around its peak
    i = int(np.argmax(row))
    above = row >= row[i] / math.e
    left = i - np.argmin(above[i::-1])
    right = np.argmin(above[i:]) + i
    assert abs((i - left) / (right - i) - 1) > 0.01


def test_focus_offset_is_a_phase():
    beam = make_beam()
    shifted = make_beam(focus=(1e-6, 2e-7, 3e-9))
    grid = beam_grid(beam, n=128)
    a = cavity_angular_spectrum(beam, grid)
    b = cavity_angular_spectrum(shifted, grid)
    assert np.allclose(np.abs(a.values), np.abs(b.values), rtol=1e-12, atol=0)
    kz = np.sqrt(np.where(a.mask, grid.kz2(K), 0))
    kx, ky = grid.kx[None, :], grid.ky[:, None]
    ph = np.exp(-1j * (kx * 1e-6 + ky * 2e-7 + kz * 3e-9))
    assert np.allclose(b.values, a.values * ph, rtol=1e-9, atol=0)


def test_reference_is_focus_amplitude():
    from xcav.beam import normalize_amplitude
    beam = make_beam()
    spec = cavity_angular_spectrum(beam, beam_grid(beam, n=64))
    assert spec.reference == pytest.approx(2 * math.pi * abs(normalize_amplitude(beam)(OMEGA)))
    assert spec.reference == pytest.approx(normalize_amplitude(beam).A0)


def test_z_independence_of_reconstructed_spectrum():
    """Invert the Fourier relation at two vacuum planes; both give the same E_in."""
    from xcav.stack import LayerStack
    from xcav.synthesis import synthesize_field
    beam = make_beam()
    grid = beam_grid(beam, n=128)
    spec = cavity_angular_spectrum(beam, grid)
    vac = LayerStack.from_layers([("v", None, 0, 0), ("v", None, 0, 0)])
    z = [-30e-9, 45e-9]
    fm = synthesize_field(spec, vac, z, keep_y=True, check_grid=False)
    kz = np.sqrt(np.where(spec.mask, grid.kz2(K), 0))
    # direct (non-FFT) discrete inverse: S(k) = (1 / 4 pi^2) sum exp(-i k.r) E(r) dx dy
    ey = np.exp(-1j * np.outer(grid.ky, grid.y))
    ex = np.exp(-1j * np.outer(grid.kx, grid.x))
    recon = []
    for i, zc in enumerate(z):
        s = ey @ fm.values[i] @ ex.T * (grid.dx * grid.dy / (4 * math.pi**2))
        recon.append(np.where(spec.mask, s * np.exp(-1j * kz * zc), 0))
    scale = np.abs(spec.values).max()
    assert np.abs(recon[0] - recon[1]).max() / scale < 1e-9
    assert np.abs(recon[0] - spec.values).max() / scale < 1e-9
