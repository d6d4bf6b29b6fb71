"""Projections applied to the transmission functions, and support-mask builders."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NoComponentError, UsageError
from .wavefield import ComplexField

__all__ = [
    "PlaneConstraint",
    "ConstraintSet",
    "apply",
    "footprint",
    "loose_mask",
    "tight_mask",
    "mask_components",
    "object_mask",
    "grow",
]

# Pixels within this relative slack of a bound count as satisfying it.  Without
# the slack a projected value can land one ulp outside the bound and a second
# projection would move it again.
_SLACK = 1e-12

PHASE_MODES = ("free", "zero", "clamp")


@dataclass(frozen=True, eq=False)
class PlaneConstraint:
    """Constraint rules for one plane.

    Rules are applied in a fixed order: amplitude, phase, then support (so the
    region outside the support always ends up exactly ``outside_value``).

    Parameters
    ----------
    support : ndarray of bool, optional
        Inside the mask values are kept; outside they are replaced by
        ``outside_value``.
    amplitude_max : float, optional
        Upper bound on ``|t|``.
    phase_mode : {"free", "zero", "clamp"}
        ``"clamp"`` restricts ``arg(t)`` to ``[0, phase_max]``.
    amplitude_fixed : float, optional
        Forces ``|t|`` to this value; takes precedence over ``amplitude_max``.
    """

    support: np.ndarray | None = None
    outside_value: complex = 1.0
    amplitude_max: float | None = None
    phase_mode: str = "free"
    phase_max: float | None = None
    amplitude_fixed: float | None = None

    def __post_init__(self):
        if self.phase_mode not in PHASE_MODES:
            raise UsageError(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")
        if self.phase_mode == "clamp" and (self.phase_max is None or self.phase_max < 0):
            raise UsageError("clamp mode needs phase_max >= 0")
        if self.amplitude_max is not None and not self.amplitude_max > 0:
            raise UsageError("amplitude_max must be positive")
        if self.amplitude_fixed is not None and not self.amplitude_fixed >= 0:
            raise UsageError("amplitude_fixed must be nonnegative")
        if self.support is not None:
            object.__setattr__(self, "support", np.asarray(self.support, dtype=bool))

    @classmethod
    def positive_absorption(cls, support=None, opaque=True):
        """``|t| <= 1``, plus zero phase for opaque objects."""
        return cls(support=support, amplitude_max=1.0, phase_mode="zero" if opaque else "free")

    def project(self, t):
        """Apply the rules to an array, returning a new array of the same dtype."""
        t = np.asarray(t)
        if not np.iscomplexobj(t):
            t = t.astype(np.complex128)
        slack = _slack(t.dtype)
        amp = np.abs(t)
        new_amp, changed = amp, None
        if self.amplitude_fixed is not None:
            a0 = self.amplitude_fixed
            changed = np.abs(amp - a0) > slack * max(a0, 1.0)
            new_amp = np.where(changed, a0, amp)
        elif self.amplitude_max is not None:
            changed = amp > self.amplitude_max * (1 + slack)
            new_amp = np.where(changed, self.amplitude_max, amp)

        if self.phase_mode == "zero":
            out = new_amp.astype(t.dtype)
        else:
            if changed is not None and changed.any():
                out = np.where(changed, new_amp * _unit(t, amp), t)
            else:
                out = t.copy()
            if self.phase_mode == "clamp":
                ph = np.angle(out)
                low = ph < -slack
                high = ph > self.phase_max + slack
                out[low] = np.abs(out[low])
                out[high] = np.abs(out[high]) * np.exp(1j * self.phase_max)

        if self.support is not None:
            out[~self.support] = self.outside_value
        return out

    def is_fixed_point(self, t):
        return bool(np.array_equal(self.project(t), t))


def _unit(t, amp):
    nz = amp > 0
    return np.where(nz, t / np.where(nz, amp, 1), 1)


def _slack(dtype):
    return max(_SLACK, 8 * np.finfo(dtype).eps)


class ConstraintSet(tuple):
    """One :class:`PlaneConstraint` per sample plane."""

    def __new__(cls, planes=()):
        planes = tuple(planes)
        for c in planes:
            if not isinstance(c, PlaneConstraint):
                raise TypeError(f"expected PlaneConstraint, got {type(c).__name__}")
        return super().__new__(cls, planes)

    @classmethod
    def uniform(cls, count, **rules):
        return cls(PlaneConstraint(**rules) for _ in range(count))


def apply(c: PlaneConstraint, t: ComplexField) -> ComplexField:
    return t.with_values(c.project(t.values))


def _values(x):
    return x.values if isinstance(x, ComplexField) else np.asarray(x)


def footprint(field, threshold=0.5, background=1.0):
    """Pixels whose deviation from ``background`` exceeds ``threshold`` of the maximum."""
    dev = np.abs(_values(field) - background)
    peak = dev.max()
    if peak == 0:
        return np.zeros(dev.shape, dtype=bool)
    return dev > threshold * peak


def loose_mask(field, scale=4.0, threshold=0.5, background=1.0):
    """Support mask covering roughly ``scale`` times the object's area.

    The thresholded footprint (holes filled) is grown one pixel at a time and
    the growth step whose area is closest to ``scale * area`` is returned; at
    least one pixel of growth is always applied.
    """
    if scale < 1:
        raise UsageError(f"scale must be >= 1, got {scale}")
    fp = footprint(field, threshold, background)
    area = fp.sum()
    if area == 0:
        warnings.warn("empty object footprint; using full support", stacklevel=2)
        return np.ones(fp.shape, dtype=bool)
    if area == fp.size:
        return fp
    target = scale * area
    struct = ndimage.generate_binary_structure(2, 1)
    cur = ndimage.binary_fill_holes(fp)
    best, best_gap = None, np.inf
    while True:
        cur = ndimage.binary_dilation(cur, struct)
        gap = abs(cur.sum() - target)
        if best is not None and gap >= best_gap:
            return best
        best, best_gap = cur, gap
        if cur.all():
            return cur


def grow(mask, radius):
    """Dilate ``mask`` by a disc of ``radius`` pixels (Euclidean, not diamond)."""
    if radius <= 0:
        return mask
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return ndimage.binary_dilation(mask, xx * xx + yy * yy <= radius * radius)


def mask_components(field, threshold=0.5, dilation=2, background=None, smooth=0.0,
                    closing=0, min_size=1):
    """Connected components of the thresholded deviation map, each dilated.

    Parameters
    ----------
    field : ComplexField or ndarray
        Initial (e.g. backpropagated) reconstruction of one plane.
    threshold : float
        Fraction of the maximal deviation ``|value - background|``.
    dilation : int
        Radius in pixels of the disc each component is dilated by.
    background : complex, optional
        Defaults to the median of the field (real and imaginary parts
        separately), which for a sparse sample is the unscattered wave.
    smooth : float
        Gaussian sigma in pixels applied to ``value - background`` before
        thresholding. Useful for noisy holograms.
    closing : int
        Iterations of binary closing; bridges gaps left by noise.
    min_size : int
        Components with fewer pixels (before dilation) are dropped.

    Returns
    -------
    list of ndarray
        Boolean masks, largest component first.
    """
    v = _values(field)
    if not 0 < threshold < 1:
        raise UsageError(f"threshold must lie in (0, 1), got {threshold}")
    if background is None:
        background = np.median(v.real) + 1j * np.median(v.imag)
    d = v - background
    if smooth > 0:
        d = ndimage.gaussian_filter(d.real, smooth) + 1j * ndimage.gaussian_filter(d.imag, smooth)
    dev = np.abs(d)
    peak = dev.max()
    if peak <= 1e-12 * max(np.abs(background), 1.0):
        raise NoComponentError("no object found above threshold; fall back to loose_mask")
    binary = dev > threshold * peak
    if closing:
        # pad so closing does not erode against the border
        binary = ndimage.binary_closing(np.pad(binary, closing), iterations=closing)
        binary = binary[closing:-closing, closing:-closing]
    binary = ndimage.binary_fill_holes(binary)
    labels, count = ndimage.label(binary)
    sizes = ndimage.sum_labels(binary, labels, np.arange(1, count + 1))
    out = []
    for k in np.argsort(-sizes, kind="stable"):
        if sizes[k] < min_size:
            continue
        comp = labels == k + 1
        out.append(grow(comp, dilation))
    if not out:
        raise NoComponentError("all components below min_size; fall back to loose_mask")
    return out


def tight_mask(field, threshold=0.5, dilation=2, background=None, **kw):
    """Union of the dilated components found by :func:`mask_components`."""
    comps = mask_components(field, threshold, dilation, background, **kw)
    return np.logical_or.reduce(comps)


def object_mask(field, center, window, threshold=0.5, dilation=2, background=None, **kw):
    """Tight mask of the single object nearest ``center`` (row, col).

    The threshold is taken relative to the local maximum inside a square
    window of half-width ``window`` around ``center``, so a weak object is
    not lost next to a strong one. The background is estimated from the
    whole field.
    """
    v = _values(field)
    if background is None:
        background = np.median(v.real) + 1j * np.median(v.imag)
    r, c = (int(round(x)) for x in center)
    r0, c0 = max(r - window, 0), max(c - window, 0)
    sub = v[r0:r + window + 1, c0:c + window + 1]
    comps = mask_components(sub, threshold, 0, background, **kw)
    lr, lc = r - r0, c - c0
    rows, cols = np.indices(sub.shape)

    def distance(m):
        return np.min(np.hypot(rows[m] - lr, cols[m] - lc))

    best = min(comps, key=distance)
    out = np.zeros(v.shape, bool)
    out[r0:r0 + sub.shape[0], c0:c0 + sub.shape[1]] = best
    return grow(out, dilation)
