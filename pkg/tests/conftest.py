import numpy as np
import pytest

from mipr3d.wavefield import ComplexField, Grid


def brute_dft2(x):
    """Centered O(n^4) DFT: both indices measured from n/2."""
    n = x.shape[0]
    j = np.arange(n) - n // 2
    out = np.zeros((n, n), dtype=complex)
    for ky in range(n):
        for kx in range(n):
            phase = np.exp(-2j * np.pi * (j[:, None] * (ky - n // 2) + j[None, :] * (kx - n // 2)) / n)
            out[ky, kx] = np.sum(x * phase)
    return out


def band_limited(grid, rng, fraction=0.5):
    """Random field whose spectrum fills only the inner ``fraction`` of the propagating disc."""
    f = grid.freqs()
    r = np.hypot(f[None, :], f[:, None]) * grid.wavelength
    spec = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    spec[r >= fraction * min(1.0, r.max())] = 0
    return ComplexField(grid, np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(spec))))


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def optical_grid():
    return Grid(64, 1.0, 0.532)
