"""Multislice forward model and detector recording."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, UnsupportedGeometryError, UsageError
from .samplegen import NoiseSpec, SliceStack, add_noise, central_quarter
from .wavefield import ComplexField, Grid, asm_propagate, propagate_array
from scipy import fft as sfft

__all__ = [
    "RecordingGeometry",
    "Measurement",
    "MultisliceWaves",
    "multislice_forward",
    "record",
    "backpropagate",
    "beamstop_mask",
]

HOLOGRAM = "hologram"
DIFFRACTION = "diffraction"


@dataclass(frozen=True)
class RecordingGeometry:
    """Where the detector sits.

    ``detector_distance`` is measured from the last sample plane and only used
    in hologram mode.  ``beamstop_radius`` (pixels) only applies in diffraction
    mode; ``None`` selects the default of ``n / 40``.
    """

    mode: str = HOLOGRAM
    detector_distance: float = 0.0
    beamstop_radius: float | None = None

    def __post_init__(self):
        if self.mode not in (HOLOGRAM, DIFFRACTION):
            raise UsageError(f"unknown recording mode {self.mode!r}")
        if self.mode == HOLOGRAM and not self.detector_distance > 0:
            raise UsageError("hologram mode needs a positive detector distance")
        if self.beamstop_radius is not None and self.beamstop_radius < 0:
            raise UsageError("beamstop radius must be nonnegative")

    def stop_radius(self, grid):
        if self.mode != DIFFRACTION:
            return 0.0
        if self.beamstop_radius is None:
            return grid.n / 40
        return float(self.beamstop_radius)


@dataclass(frozen=True, eq=False)
class Measurement:
    grid: Grid
    intensity: np.ndarray
    valid_mask: np.ndarray
    geometry: RecordingGeometry
    z_list: tuple = field(default=())

    def __post_init__(self):
        i = np.asarray(self.intensity, dtype=float)
        v = np.asarray(self.valid_mask, dtype=bool)
        if i.shape != self.grid.shape or v.shape != self.grid.shape:
            raise DimensionError("intensity and mask must match the grid")
        if np.any(i < 0) or not np.all(np.isfinite(i)):
            raise UsageError("intensity must be finite and nonnegative")
        if np.any(i[~v] != 0):
            i = np.where(v, i, 0.0)
        object.__setattr__(self, "intensity", i)
        object.__setattr__(self, "valid_mask", v)
        object.__setattr__(self, "z_list", tuple(float(z) for z in self.z_list))

    @property
    def amplitude(self):
        return np.sqrt(self.intensity)

    @property
    def detector_position(self):
        """Axial position of the detector in the sample frame (hologram mode)."""
        last = self.z_list[-1] if self.z_list else 0.0
        return last + self.geometry.detector_distance


class MultisliceWaves(NamedTuple):
    before: list
    after: list
    exit: ComplexField


def beamstop_mask(grid, radius):
    """True for pixels at distance ``<= radius`` from the center pixel."""
    if radius <= 0:
        return np.zeros(grid.shape, dtype=bool)
    return grid.radius_px() <= radius


def multislice_forward(stack: SliceStack, incident: ComplexField | None = None) -> MultisliceWaves:
    """Propagate ``incident`` through every plane of ``stack``.

    ``a_p = t_p * b_p`` at each plane and ``b_{p+1}`` is ``a_p`` carried over
    the gap to the next plane.  The incident wave defaults to a unit plane
    wave.
    """
    if incident is None:
        incident = ComplexField.constant(stack.grid)
    elif incident.grid != stack.grid:
        raise DimensionError(f"incident grid {incident.grid} does not match stack grid {stack.grid}")
    if len(stack) == 0:
        return MultisliceWaves([], [], incident)
    before, after = [], []
    b = incident
    for p, (t, z) in enumerate(stack.planes):
        if p:
            b = asm_propagate(after[-1], z - stack.z[p - 1])
        before.append(b)
        after.append(b.with_values(t * b.values))
    return MultisliceWaves(before, after, after[-1])


def detector_array(exit_values, grid, geometry):
    if geometry.mode == HOLOGRAM:
        return propagate_array(exit_values, grid, geometry.detector_distance)
    return sfft.fftshift(sfft.fft2(sfft.ifftshift(exit_values)))


def exit_array(detector_values, grid, geometry):
    """Inverse of :func:`detector_array` on the propagating band."""
    if geometry.mode == HOLOGRAM:
        return propagate_array(detector_values, grid, -geometry.detector_distance)
    return sfft.fftshift(sfft.ifft2(sfft.ifftshift(detector_values)))


def record(stack: SliceStack, geometry: RecordingGeometry, noise: NoiseSpec = NoiseSpec()) -> Measurement:
    """Simulate the detector intensity for a plane wave through ``stack``."""
    if len(stack) == 0:
        raise UsageError("cannot record an empty stack")
    grid = stack.grid
    exit_wave = multislice_forward(stack).exit
    if geometry.mode == DIFFRACTION:
        deviates = np.abs(stack.transmissions[0] - 1) > 0
        for t in stack.transmissions[1:]:
            deviates |= np.abs(t - 1) > 0
        if np.any(deviates & ~central_quarter(grid)):
            warnings.warn("sample extends beyond the central quarter; diffraction pattern is undersampled",
                          stacklevel=2)
    d = detector_array(exit_wave.values, grid, geometry)
    intensity = np.abs(d) ** 2
    valid = ~beamstop_mask(grid, geometry.stop_radius(grid))
    intensity[~valid] = 0.0
    intensity = add_noise(intensity, noise)
    intensity[~valid] = 0.0
    return Measurement(grid, intensity, valid, geometry, stack.z)


def backpropagate(m: Measurement, z: float) -> ComplexField:
    """Conventional reconstruction: carry ``sqrt(I)`` (zero phase) back to plane ``z``."""
    if m.geometry.mode != HOLOGRAM:
        raise UnsupportedGeometryError(
            "backpropagation needs a hologram; use random-phase initialization for diffraction data")
    d = ComplexField(m.grid, m.amplitude)
    return asm_propagate(d, z - m.detector_position)
