"""Phantom samples (stacks of transmission planes) and detector noise."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SupportViolationError, UnsupportedGlyphError, UsageError
from .font import GLYPHS, render_glyph
from .wavefield import Grid

__all__ = [
    "SliceStack",
    "NoiseSpec",
    "letters_phantom",
    "letter_layout",
    "sphere_phantom",
    "honeycomb_sites",
    "bilayer_phantom",
    "add_noise",
    "central_quarter",
]


@dataclass(frozen=True, eq=False)
class SliceStack:
    """Ordered transmission planes ``t_p`` at axial positions ``z_p``.

    ``z`` must be nondecreasing; equal neighbours are allowed and mean the
    two planes coincide.
    """

    grid: Grid
    transmissions: tuple
    z: tuple

    def __post_init__(self):
        ts = tuple(np.asarray(t, dtype=np.complex128) for t in self.transmissions)
        zs = tuple(float(z) for z in self.z)
        if len(ts) != len(zs):
            raise DimensionError(f"{len(ts)} planes but {len(zs)} z positions")
        for t in ts:
            if t.shape != self.grid.shape:
                raise DimensionError(f"plane of shape {t.shape} does not match grid {self.grid.shape}")
        if any(b < a for a, b in zip(zs, zs[1:])):
            raise UsageError(f"plane positions must be nondecreasing, got {zs}")
        object.__setattr__(self, "transmissions", ts)
        object.__setattr__(self, "z", zs)

    def __len__(self):
        return len(self.transmissions)

    @property
    def planes(self):
        return list(zip(self.transmissions, self.z))

    @property
    def spacings(self):
        return [b - a for a, b in zip(self.z, self.z[1:])]

    def with_transmissions(self, transmissions):
        return SliceStack(self.grid, tuple(transmissions), self.z)

    @classmethod
    def blank(cls, grid, z):
        return cls(grid, tuple(np.ones(grid.shape, complex) for _ in z), tuple(z))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian detector noise; ``target_snr = inf`` disables it."""

    target_snr: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if not self.target_snr > 0:
            raise UsageError(f"target SNR must be positive, got {self.target_snr}")


def central_quarter(grid):
    """Boolean mask of the central ``n/2 x n/2`` block."""
    n = grid.n
    m = np.zeros(grid.shape, dtype=bool)
    m[n // 4 : 3 * n // 4, n // 4 : 3 * n // 4] = True
    return m


def _check_support(grid, footprint, what):
    if np.any(footprint & ~central_quarter(grid)):
        raise SupportViolationError(f"{what} extends outside the central quarter of the grid")


def letter_layout(n, count):
    """Default glyph centers (row, col) on a square layout inside the central quarter.

    Cells are filled in snake order (odd rows right to left). With four
    glyphs in row-major order the point reflection of each cell would hold
    the glyph of the mirrored plane, and a far-field pattern of equidistant
    real planes could not tell the stack from its inverted twin.
    """
    if count == 0:
        return []
    k = math.ceil(math.sqrt(count))
    cell = (n // 2) / k
    out = []
    for i in range(count):
        r, c = divmod(i, k)
        if r % 2:
            c = k - 1 - c
        out.append((int(n // 4 + (r + 0.5) * cell), int(n // 4 + (c + 0.5) * cell)))
    return out


def letters_phantom(grid, z_list, glyphs, height=None, positions=None):
    """Opaque letters, one per plane: ``t = 0`` on the glyph and 1 elsewhere.

    Parameters
    ----------
    grid : Grid
    z_list : sequence of float
        Plane positions, one per glyph.
    glyphs : str
        Uppercase letters A-Z.
    height : int, optional
        Glyph height in pixels; defaults to ``n // 8`` (shrunk to fit when more
        than four glyphs share the central quarter).
    positions : sequence of (row, col), optional
        Glyph centers in pixels; defaults to :func:`letter_layout`.
    """
    glyphs = str(glyphs)
    if len(glyphs) != len(z_list):
        raise UsageError(f"{len(glyphs)} glyphs but {len(z_list)} z positions")
    bad = [g for g in glyphs if g not in GLYPHS]
    if bad:
        raise UnsupportedGlyphError(bad)
    n = grid.n
    if positions is None:
        positions = letter_layout(n, len(glyphs))
        if height is None and glyphs:
            k = math.ceil(math.sqrt(len(glyphs)))
            height = min(n // 8, int(0.8 * (n // 2) / k))
    elif len(positions) != len(glyphs):
        raise UsageError("positions must match glyphs")
    if height is None:
        height = n // 8
    planes = []
    for ch, (r0, c0) in zip(glyphs, positions):
        bm = render_glyph(ch, height)
        h, w = bm.shape
        top, left = int(r0) - h // 2, int(c0) - w // 2
        if top < 0 or left < 0 or top + h > n or left + w > n:
            raise SupportViolationError(f"glyph {ch!r} does not fit on the grid")
        ink = np.zeros(grid.shape, dtype=bool)
        ink[top : top + h, left : left + w] = bm
        _check_support(grid, ink, f"glyph {ch!r}")
        planes.append(np.where(ink, 0.0, 1.0).astype(np.complex128))
    return SliceStack(grid, tuple(planes), tuple(z_list))


def sphere_phantom(grid, spheres, diameter, a_max, phi_max):
    """Weakly absorbing phase spheres ``t = exp(-a) exp(i phi)``.

    Both ``a`` and ``phi`` follow the projected chord length of a homogeneous
    sphere, ``sqrt(1 - r**2 / R**2)``, scaled to ``a_max`` and ``phi_max`` at
    the sphere center.  Spheres sharing a ``z`` end up in the same plane.

    Parameters
    ----------
    spheres : sequence of (x, y, z)
        Centers in grid length units, ``(0, 0)`` being the center pixel.
    """
    if not diameter > 0:
        raise UsageError(f"sphere diameter must be positive, got {diameter}")
    if a_max < 0:
        raise UsageError(f"a_max must be nonnegative, got {a_max}")
    x, y = grid.meshgrid()
    radius = diameter / 2
    by_z = {}
    for sx, sy, sz in spheres:
        r2 = ((x - sx) ** 2 + (y - sy) ** 2) / radius**2
        inside = r2 < 1
        _check_support(grid, inside, f"sphere at ({sx}, {sy})")
        chord = np.sqrt(np.clip(1 - r2, 0, None))
        by_z.setdefault(float(sz), []).append(chord)
    zs = sorted(by_z)
    planes = []
    for z in zs:
        c = np.sum(by_z[z], axis=0)
        planes.append(np.exp(-a_max * c) * np.exp(1j * phi_max * c))
    return SliceStack(grid, tuple(planes), tuple(zs))


def honeycomb_sites(radius, lattice_constant=0.246, twist=0.0):
    """Graphene-like honeycomb sites within ``radius`` of the origin.

    The lattice is rotated by ``twist`` degrees about the origin.  Returns an
    ``(m, 2)`` array of ``(x, y)`` positions.
    """
    a = lattice_constant
    a1 = np.array([a, 0.0])
    a2 = np.array([a / 2, a * math.sqrt(3) / 2])
    basis = [np.zeros(2), (a1 + a2) / 3]
    # shift so the rotation center sits in a hexagon center; keeps both layers symmetric
    offset = -(a1 + a2) / 3 * 2
    k = int(math.ceil(2 * radius / a)) + 2
    i, j = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
    cells = i.ravel()[:, None] * a1 + j.ravel()[:, None] * a2
    pts = np.concatenate([cells + b + offset for b in basis])
    th = math.radians(twist)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    pts = pts @ rot.T
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) < radius]
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return pts[order]


def _bump_phase(grid, sites, sigma):
    x, y = grid.meshgrid()
    phase = np.zeros(grid.shape)
    # bumps are negligible beyond 5 sigma; paste each into a local window
    half = int(math.ceil(5 * sigma / grid.pitch))
    c = grid.n // 2
    for sx, sy in sites:
        col = int(round(sx / grid.pitch)) + c
        row = int(round(sy / grid.pitch)) + c
        r0, r1 = max(row - half, 0), min(row + half + 1, grid.n)
        c0, c1 = max(col - half, 0), min(col + half + 1, grid.n)
        dx = x[r0:r1, c0:c1] - sx
        dy = y[r0:r1, c0:c1] - sy
        phase[r0:r1, c0:c1] += np.exp(-(dx**2 + dy**2) / (2 * sigma**2))
    return phase


def bilayer_phantom(
    grid,
    twist=7.0,
    spacing=0.335,
    phi_peak=0.24,
    patch_diameter=4.0,
    defects=(),
    lattice_constant=0.246,
    bump_sigma=0.05,
    z0=0.0,
):
    """Two pure-phase honeycomb layers, the second rotated by ``twist`` degrees.

    Each atom is a Gaussian phase bump of width ``bump_sigma``; the phase of
    each layer is normalized to peak at ``phi_peak`` and cut to zero outside
    the round patch.  Length defaults are in nanometres.

    ``defects`` lists ``(x, y)`` positions; the nearest site of layer 2 to
    each is removed.
    """
    radius = patch_diameter / 2
    x, y = grid.meshgrid()
    patch = np.hypot(x, y) < radius
    _check_support(grid, patch, "bilayer patch")
    layer1 = honeycomb_sites(radius, lattice_constant, 0.0)
    layer2 = honeycomb_sites(radius, lattice_constant, twist)
    if len(defects):
        keep = np.ones(len(layer2), dtype=bool)
        for dx, dy in defects:
            keep[np.argmin(np.hypot(layer2[:, 0] - dx, layer2[:, 1] - dy))] = False
        layer2 = layer2[keep]
    planes = []
    for sites in (layer1, layer2):
        bumps = _bump_phase(grid, sites, bump_sigma)
        bumps = np.where(patch, bumps, 0.0)
        peak = bumps.max()
        phase = phi_peak * bumps / peak if peak > 0 else bumps
        planes.append(np.exp(1j * phase))
    return SliceStack(grid, tuple(planes), (z0, z0 + spacing))


def add_noise(intensity, spec):
    """Add zero-mean Gaussian noise with ``std = mean(I) / target_snr``.

    The result is clamped at zero.  Deterministic for a given ``spec.seed``.
    """
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise UsageError("intensity must be nonnegative")
    if math.isinf(spec.target_snr):
        return intensity.copy()
    rng = np.random.default_rng(spec.seed)
    sigma = intensity.mean() / spec.target_snr
    noisy = intensity + rng.normal(0.0, sigma, intensity.shape)
    if sigma == 0:
        warnings.warn("zero-mean intensity: noise has no effect", stacklevel=2)
    return np.clip(noisy, 0.0, None)
