"""Figures of merit for comparing reconstructions with known phantoms."""

from __future__ import annotations

import numpy as np

from .samplegen import central_quarter
from .wavefield import ComplexField, Grid

__all__ = [
    "ncc",
    "plane_correlations",
    "normalize_background",
    "chord_peak_phase",
    "letter_residual",
    "gradient_energy",
]


def _values(x):
    return x.values if isinstance(x, ComplexField) else np.asarray(x)


def ncc(a, b, region=None):
    """Normalized (Pearson) correlation of two real arrays over ``region``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if region is not None:
        a, b = a[region], b[region]
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a * a).sum() * (b * b).sum())
    return float((a * b).sum() / den) if den > 0 else 0.0


def plane_correlations(recon, truth, quantity=np.abs, region="quarter"):
    """Per-plane :func:`ncc` of ``quantity(t)`` between two stacks.

    The default region is the central quarter of the grid, where every
    phantom lives.
    """
    if len(recon) != len(truth):
        raise ValueError("stacks have different plane counts")
    if isinstance(region, str):
        region = central_quarter(truth.grid)
    return [
        ncc(quantity(r), quantity(t), region)
        for r, t in zip(recon.transmissions, truth.transmissions)
    ]


def normalize_background(t):
    """Divide by the complex median so the unscattered wave becomes 1."""
    t = _values(t)
    bg = np.median(t.real) + 1j * np.median(t.imag)
    return t / bg


def chord_peak_phase(t, grid: Grid, center, diameter):
    """Peak phase of a sphere from a least-squares fit of its chord profile.

    Fits ``phi(r) = phi_max sqrt(1 - r^2/R^2)`` to ``arg(t)`` over the disc
    of radius ``R`` around ``center = (x, y)``. Averaging over the whole disc
    makes the estimate robust to pixel noise, which biases a plain maximum
    upward.
    """
    x, y = grid.meshgrid()
    r2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2) / (diameter / 2) ** 2
    inside = r2 < 1
    c = np.sqrt(1 - r2[inside])
    ph = np.angle(_values(t))[inside]
    return float((ph * c).sum() / (c * c).sum())


def letter_residual(recon, truth, plane, threshold=0.5):
    """Worst ghost of other planes' letters in one reconstructed plane.

    For every other plane ``q`` the mean absorption ``1 - |t|`` of the
    reconstruction of ``plane`` over the pixels of letter ``q`` is compared
    with its mean over letter-free pixels of the central quarter. The
    largest excess is returned, together with the raw mean over the worst
    letter.

    Returns
    -------
    contrast, raw : float
    """
    cq = central_quarter(truth.grid)
    inks = [np.abs(t) < threshold for t in truth.transmissions]
    absorb = 1 - np.abs(recon.transmissions[plane])
    floor = absorb[cq & ~np.logical_or.reduce(inks)].mean()
    best = (-np.inf, -np.inf)
    for q, ink in enumerate(inks):
        if q == plane or not ink.any():
            continue
        raw = absorb[ink].mean()
        best = max(best, (raw - floor, raw))
    return float(best[0]), float(best[1])


def gradient_energy(field):
    """Sum of squared finite-difference gradients of ``|u|``; larger is sharper."""
    a = np.abs(_values(field))
    gy, gx = np.gradient(a)
    return float((gx**2 + gy**2).sum())
