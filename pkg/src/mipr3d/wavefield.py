"""Scalar complex wavefields on square grids and their free-space propagators.

All transforms are *centered*: the zero-frequency sample (and the spatial
origin) sits at pixel ``(n // 2, n // 2)``.  The forward transform is
unnormalized and the inverse carries the ``1 / n**2`` factor, matching
``numpy.fft``.

Lengths are unitless as far as this module is concerned; pitch and wavelength
only need to share a unit (micrometres for the optical examples, nanometres for
the electron examples).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import constants
from scipy import fft as sfft

from .errors import DimensionError, DomainError

__all__ = [
    "Grid",
    "ComplexField",
    "dft2",
    "idft2",
    "transfer_function",
    "asm_propagate",
    "far_field",
    "far_field_inv",
    "r_axial",
    "electron_wavelength",
]


@dataclass(frozen=True)
class Grid:
    """Square sampling grid.

    Parameters
    ----------
    n : int
        Pixels per side, even and at least 2.
    pitch : float
        Pixel size.
    wavelength : float
        Wavelength, in the same unit as ``pitch``.
    """

    n: int
    pitch: float
    wavelength: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise DomainError(f"grid size must be an even integer >= 2, got {self.n}")
        if not (np.isfinite(self.pitch) and self.pitch > 0):
            raise DomainError(f"pitch must be positive, got {self.pitch}")
        if not (np.isfinite(self.wavelength) and self.wavelength > 0):
            raise DomainError(f"wavelength must be positive, got {self.wavelength}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "pitch", float(self.pitch))
        object.__setattr__(self, "wavelength", float(self.wavelength))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def extent(self):
        """Side length of the field of view."""
        return self.n * self.pitch

    def coords(self):
        """Centered 1D pixel coordinates, ``(j - n/2) * pitch``."""
        return (np.arange(self.n) - self.n // 2) * self.pitch

    def freqs(self):
        """Centered 1D spatial frequencies ``{-n/2, ..., n/2-1} / (n * pitch)``."""
        return (np.arange(self.n) - self.n // 2) / (self.n * self.pitch)

    def meshgrid(self):
        """``(x, y)`` coordinate arrays, ``x`` varying along columns."""
        c = self.coords()
        return np.meshgrid(c, c, indexing="xy")

    def radius_px(self):
        """Distance of each pixel from the center pixel, in pixels."""
        j = np.arange(self.n) - self.n // 2
        return np.hypot(j[None, :], j[:, None])


@dataclass(frozen=True, eq=False)
class ComplexField:
    """A complex wavefield sampled on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise DimensionError(f"values of shape {v.shape} do not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid, value=1.0):
        return cls(grid, np.full(grid.shape, value, dtype=np.complex128))

    def with_values(self, values):
        return ComplexField(self.grid, values)

    @property
    def intensity(self):
        return np.abs(self.values) ** 2

    @property
    def amplitude(self):
        return np.abs(self.values)

    @property
    def phase(self):
        return np.angle(self.values)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))


def _check(u):
    if not isinstance(u, ComplexField):
        raise TypeError(f"expected ComplexField, got {type(u).__name__}")


def _centered_fft(v):
    return sfft.fftshift(sfft.fft2(sfft.ifftshift(v)))


def _centered_ifft(v):
    return sfft.fftshift(sfft.ifft2(sfft.ifftshift(v)))


def dft2(u: ComplexField) -> ComplexField:
    """Centered, unnormalized 2D discrete Fourier transform."""
    _check(u)
    return u.with_values(_centered_fft(u.values))


def idft2(u: ComplexField) -> ComplexField:
    """Inverse of :func:`dft2` (carries the ``1/n**2`` factor)."""
    _check(u)
    return u.with_values(_centered_ifft(u.values))


@lru_cache(maxsize=64)
def _kernel(n, pitch, wavelength, dz, dtype):
    # unshifted (numpy fft order) transfer function; read-only so it can be cached
    f = sfft.fftfreq(n, d=pitch)
    arg = 1.0 - (wavelength * f[None, :]) ** 2 - (wavelength * f[:, None]) ** 2
    propagating = arg >= 0
    kz = np.sqrt(np.where(propagating, arg, 0.0))
    h = np.where(propagating, np.exp(1j * (2 * np.pi * dz / wavelength) * kz), 0.0)
    h = h.astype(dtype)
    h.setflags(write=False)
    return h


def asm_kernel(grid: Grid, dz: float, dtype=np.complex128) -> np.ndarray:
    """Angular-spectrum transfer function in unshifted FFT order.

    Evanescent components are set to zero rather than damped.
    """
    return _kernel(grid.n, grid.pitch, grid.wavelength, float(dz), np.dtype(dtype))


def transfer_function(grid: Grid, dz: float) -> np.ndarray:
    """Angular-spectrum transfer function, centered like :func:`dft2` output."""
    return sfft.fftshift(asm_kernel(grid, dz))


def propagate_array(values, grid, dz):
    """Array-level angular-spectrum propagation, used by the iteration engine."""
    if dz == 0:
        return values
    return sfft.ifft2(sfft.fft2(values) * asm_kernel(grid, dz, values.dtype))


def asm_propagate(u: ComplexField, dz: float) -> ComplexField:
    """Propagate ``u`` over axial distance ``dz`` with the angular spectrum method.

    ``dz`` may be negative (backward propagation).  ``dz == 0`` returns the
    field unchanged.  Filtering commutes with the circular shift, so the
    uncentered FFT is used directly.
    """
    _check(u)
    dz = float(dz)
    if not np.isfinite(dz):
        raise DomainError(f"propagation distance must be finite, got {dz}")
    if dz == 0.0:
        return u
    return u.with_values(propagate_array(u.values, u.grid, dz))


def far_field(u: ComplexField) -> ComplexField:
    """Fraunhofer pattern of ``u``: the centered forward transform.

    Constant phase and scale prefactors are dropped since only the intensity
    is ever recorded.
    """
    return dft2(u)


def far_field_inv(d: ComplexField) -> ComplexField:
    return idft2(d)


def r_axial(wavelength, na):
    """Classical axial resolution ``2 * wavelength / NA**2``."""
    if not (0 < na <= 1):
        raise DomainError(f"numerical aperture must lie in (0, 1], got {na}")
    if wavelength <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    return 2.0 * wavelength / na**2


def electron_wavelength(energy_kev, unit=1e-9):
    """Relativistic de Broglie wavelength of an electron.

    Parameters
    ----------
    energy_kev : float
        Kinetic energy in keV.
    unit : float
        Length unit of the result in metres (default nanometres).
    """
    if not energy_kev > 0:
        raise DomainError(f"electron energy must be positive, got {energy_kev}")
    m0, e, c, h = constants.m_e, constants.e, constants.c, constants.h
    ev = e * energy_kev * 1e3
    lam = h / np.sqrt(2 * m0 * ev * (1 + ev / (2 * m0 * c**2)))
    return lam / unit
