import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mipr3d.errors import DomainError
from mipr3d.wavefield import (
    ComplexField,
    Grid,
    asm_propagate,
    dft2,
    electron_wavelength,
    far_field,
    far_field_inv,
    idft2,
    r_axial,
    transfer_function,
)

from conftest import band_limited, brute_dft2, rel_err


@pytest.mark.parametrize("n", [1, 3, 0, -2])
def test_grid_rejects_bad_size(n):
    with pytest.raises(DomainError):
        Grid(n, 1.0, 0.5)


def test_grid_frequencies():
    g = Grid(4, 0.5, 1.0)
    np.testing.assert_allclose(g.freqs(), np.array([-2, -1, 0, 1]) / 2.0)


def test_dft_of_center_impulse_is_flat():
    g = Grid(8, 1.0, 1.0)
    v = np.zeros(g.shape)
    v[4, 4] = 1
    np.testing.assert_array_equal(dft2(ComplexField(g, v)).values, np.ones(g.shape))


def test_dft_of_constant_is_impulse():
    g = Grid(8, 1.0, 1.0)
    out = dft2(ComplexField.constant(g)).values
    expected = np.zeros(g.shape)
    expected[4, 4] = 64
    np.testing.assert_allclose(out, expected, atol=1e-12)


@pytest.mark.parametrize("n", [4, 8])
def test_dft_matches_brute_force(n, rng):
    g = Grid(n, 1.0, 1.0)
    x = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    u = ComplexField(g, x)
    assert rel_err(dft2(u).values, brute_dft2(x)) <= 1e-12
    assert rel_err(far_field(u).values, brute_dft2(x)) <= 1e-12


def test_inverse_round_trip(rng):
    g = Grid(16, 1.0, 1.0)
    u = ComplexField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    assert rel_err(idft2(dft2(u)).values, u.values) <= 1e-12
    assert rel_err(far_field_inv(far_field(u)).values, u.values) <= 1e-12


def test_far_field_of_zero():
    g = Grid(8, 1.0, 1.0)
    assert not np.any(far_field(ComplexField.constant(g, 0)).values)


def test_far_field_square_aperture_peaks_at_center():
    g = Grid(32, 1.0, 1.0)
    v = np.zeros(g.shape)
    v[12:20, 12:20] = 1
    inten = far_field(ComplexField(g, v)).intensity
    assert np.unravel_index(np.argmax(inten), g.shape) == (16, 16)
    # separable: I(kx, ky) = I_x(kx) I_y(ky) / I(0,0)
    np.testing.assert_allclose(inten, np.outer(inten[:, 16], inten[16, :]) / inten[16, 16], atol=1e-9)


def test_asm_zero_distance_is_identity(rng, optical_grid):
    u = ComplexField(optical_grid, rng.normal(size=optical_grid.shape) + 0j)
    out = asm_propagate(u, 0.0)
    np.testing.assert_array_equal(out.values, u.values)


def test_asm_plane_wave_phase(optical_grid):
    dz = 12.3
    out = asm_propagate(ComplexField.constant(optical_grid), dz).values
    np.testing.assert_allclose(out, np.exp(2j * np.pi * dz / optical_grid.wavelength), atol=1e-12)


def test_asm_gaussian_beam_spreading():
    # w(z) = w0 sqrt(1 + (lambda z / (pi w0^2))^2); RMS width of intensity is w / 2
    w0, lam, dz = 20.0, 0.532, 500.0
    g = Grid(256, 1.0, lam)
    x, y = g.meshgrid()
    u = ComplexField(g, np.exp(-(x**2 + y**2) / w0**2))

    def rms_width(f):
        inten = f.intensity
        return np.sqrt(np.sum(inten * x**2) / inten.sum())

    wz = w0 * np.sqrt(1 + (lam * dz / (np.pi * w0**2)) ** 2)
    assert rms_width(u) == pytest.approx(w0 / 2, rel=1e-3)
    assert rms_width(asm_propagate(u, dz)) == pytest.approx(wz / 2, rel=0.01)


def test_evanescent_components_are_zeroed():
    g = Grid(16, 0.1, 1.0)  # most of the band is evanescent
    h = transfer_function(g, 3.0)
    f = g.freqs()
    r = np.hypot(f[None, :], f[:, None]) * g.wavelength
    assert np.all(h[r > 1] == 0)
    np.testing.assert_allclose(np.abs(h[r <= 1]), 1.0)


def test_r_axial_values():
    assert r_axial(0.532, 0.57735) == pytest.approx(3.192, abs=1e-3)
    assert r_axial(0.532, 1.0) == pytest.approx(1.064)
    assert r_axial(1.064, 0.3) == pytest.approx(2 * r_axial(0.532, 0.3))


@pytest.mark.parametrize("na", [0.0, -0.1, 1.01])
def test_r_axial_domain(na):
    with pytest.raises(DomainError):
        r_axial(0.5, na)


def _de_broglie_pm(kev):
    # independent evaluation with CODATA 2018 constants
    h, m0, e, c = 6.62607015e-34, 9.1093837015e-31, 1.602176634e-19, 299792458.0
    eV = e * kev * 1e3
    return h / np.sqrt(2 * m0 * eV * (1 + eV / (2 * m0 * c**2))) * 1e12


@pytest.mark.parametrize("kev, pm", [(80, 4.176), (100, 3.701)])
def test_electron_wavelength(kev, pm):
    assert _de_broglie_pm(kev) == pytest.approx(pm, rel=5e-3)
    assert electron_wavelength(kev) * 1e3 == pytest.approx(pm, rel=5e-3)
    assert electron_wavelength(kev, unit=1e-12) == pytest.approx(_de_broglie_pm(kev), rel=1e-9)


def test_electron_wavelength_monotone_and_domain():
    e = np.linspace(1, 300, 50)
    lam = [electron_wavelength(x) for x in e]
    assert np.all(np.diff(lam) < 0)
    with pytest.raises(DomainError):
        electron_wavelength(0)


sizes = st.sampled_from([8, 16, 32])


@settings(max_examples=25, deadline=None)
@given(n=sizes, seed=st.integers(0, 2**32 - 1))
def test_parseval(n, seed):
    rng = np.random.default_rng(seed)
    g = Grid(n, 1.0, 1.0)
    u = ComplexField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    lhs = np.sum(u.intensity)
    rhs = np.sum(dft2(u).intensity) / n**2
    assert abs(lhs - rhs) / lhs <= 1e-12


@settings(max_examples=25, deadline=None)
@given(n=sizes, seed=st.integers(0, 2**32 - 1), dz=st.floats(-200, 200), pitch=st.floats(0.3, 2.0))
def test_asm_unitary_and_reversible(n, seed, dz, pitch):
    g = Grid(n, pitch, 0.532)
    u = band_limited(g, np.random.default_rng(seed), fraction=0.9)
    out = asm_propagate(u, dz)
    assert abs(out.intensity.sum() - u.intensity.sum()) / u.intensity.sum() <= 1e-12
    assert rel_err(asm_propagate(out, -dz).values, u.values) <= 1e-10
    assert out.is_finite()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), z1=st.floats(-100, 100), z2=st.floats(-100, 100))
def test_asm_semigroup(seed, z1, z2):
    g = Grid(32, 0.5, 0.532)
    u = band_limited(g, np.random.default_rng(seed))
    a = asm_propagate(u, z1 + z2)
    b = asm_propagate(asm_propagate(u, z1), z2)
    assert rel_err(b.values, a.values) <= 1e-10
