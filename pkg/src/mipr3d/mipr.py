"""Multislice iterative phase retrieval.

One iteration runs a forward multislice pass to the detector, replaces the
modelled amplitude by the measured one, then walks back through the planes
from last to first.  At each plane the transmission is re-estimated as
(backward wave) / (forward incident wave), constrained, and the incident
wave is re-derived as (backward wave) / (constrained transmission) before it
is carried to the previous plane.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .constraints import ConstraintSet, PlaneConstraint
from .errors import DivergedError, UsageError
from .forward import DIFFRACTION, Measurement, backpropagate
from .samplegen import SliceStack
from .wavefield import propagate_array

__all__ = [
    "MiprConfig",
    "ReconstructionResult",
    "initialize",
    "iterate",
    "reconstruct",
    "residual_error",
    "multi_start",
    "refine_z",
    "conventional",
]

log = logging.getLogger(__name__)

INIT_MODES = ("backpropagate", "random_phase")
ERROR_MODES = ("ratio_of_sums", "per_pixel")
PRECISIONS = {"single": np.complex64, "double": np.complex128}


@dataclass(frozen=True, eq=False)
class MiprConfig:
    """Settings for a reconstruction run.

    ``restarts`` is only used by :func:`multi_start`; seeds ``seed``,
    ``seed + 1``, ... are given to the restarts in order.  ``tolerance``
    enables an optional early stop once the error changes by less than it
    between iterations.  ``precision="single"`` runs the iteration loop in
    complex64, which is markedly faster; the returned transmissions are always
    re-projected in double precision.
    """

    iterations: int = 1000
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    init_mode: str = "backpropagate"
    restarts: int = 1
    seed: int = 0
    division_epsilon: float = 1e-8
    error_mode: str = "ratio_of_sums"
    tolerance: float | None = None
    workers: int = 1
    precision: str = "single"

    def __post_init__(self):
        if self.iterations < 1:
            raise UsageError("iterations must be >= 1")
        if self.restarts < 1:
            raise UsageError("restarts must be >= 1")
        if not self.division_epsilon > 0:
            raise UsageError("division_epsilon must be positive")
        if self.init_mode not in INIT_MODES:
            raise UsageError(f"init_mode must be one of {INIT_MODES}")
        if self.error_mode not in ERROR_MODES:
            raise UsageError(f"error_mode must be one of {ERROR_MODES}")
        if self.precision not in PRECISIONS:
            raise UsageError(f"precision must be one of {tuple(PRECISIONS)}")
        object.__setattr__(self, "constraints", ConstraintSet(self.constraints))


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    stack: SliceStack
    error_history: np.ndarray
    final_error: float
    seed_used: int


def _divide(x, y, eps):
    """Regularized ``x / y``: ``x conj(y) / (|y|^2 + eps max|y|^2)``."""
    p = (y.real**2 + y.imag**2)
    return x * np.conj(y) / (p + eps * p.max())


def _amplitude_error(model_amp, meas_amp, valid, mode):
    fit = model_amp[valid]
    diff = np.abs(meas_amp[valid] - fit)
    if mode == "ratio_of_sums":
        den = fit.sum()
        return float(diff.sum() / den) if den > 0 else float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(fit > 0, diff / fit, np.where(diff > 0, np.inf, 0.0))
    return float(ratio.sum())


class _Model:
    """Array-level forward/backward operators for a measurement and plane set.

    Detector arrays are kept in unshifted FFT order; for far-field data this
    only permutes pixels and multiplies by a (-1)**k checkerboard, neither of
    which affects amplitudes.
    """

    def __init__(self, m, z_list, dtype=np.complex128):
        self.grid = m.grid
        self.dtype = np.dtype(dtype)
        self.geometry = m.geometry
        self.z = [float(z) for z in z_list]
        if any(b < a for a, b in zip(self.z, self.z[1:])):
            raise UsageError(f"plane positions must be nondecreasing, got {self.z}")
        self.gaps = [b - a for a, b in zip(self.z, self.z[1:])]
        self.far = m.geometry.mode == DIFFRACTION
        shift = sfft.ifftshift if self.far else (lambda a: a)
        self.amp = shift(m.amplitude).astype(self.dtype.char.lower())
        self.valid = shift(m.valid_mask)
        self.all_valid = bool(self.valid.all())

    def prop(self, u, dz):
        return propagate_array(u, self.grid, dz)

    def to_detector(self, exit_wave):
        if self.far:
            return sfft.fft2(exit_wave)
        return self.prop(exit_wave, self.geometry.detector_distance)

    def from_detector(self, d):
        if self.far:
            return sfft.ifft2(d)
        return self.prop(d, -self.geometry.detector_distance)

    def forward(self, ts):
        befores = []
        a = None
        for p, t in enumerate(ts):
            b = np.ones(self.grid.shape, dtype=self.dtype) if p == 0 else self.prop(a, self.gaps[p - 1])
            befores.append(b)
            a = t * b
        return befores, self.to_detector(a)

    def replace_amplitude(self, d):
        mod = np.abs(d)
        phase = np.where(mod > 0, d / np.where(mod > 0, mod, 1.0), 1.0)
        new = self.amp * phase
        if not self.all_valid:
            new = np.where(self.valid, new, d)
        return new, mod

    def error(self, mod, mode):
        return _amplitude_error(mod, self.amp, self.valid, mode)


def _stack_from(m, z_list, ts):
    return SliceStack(m.grid, tuple(ts), tuple(z_list))


def _constraints_for(cfg, count):
    cons = cfg.constraints
    if len(cons) == 0:
        return ConstraintSet(PlaneConstraint() for _ in range(count))
    if len(cons) != count:
        raise UsageError(f"{len(cons)} plane constraints for {count} planes")
    return cons


def initialize(m: Measurement, z_list, cfg: MiprConfig, seed=None) -> SliceStack:
    """Initial transmissions from a single backward sweep of the detector field.

    Hologram data may use zero-phase backpropagation of ``sqrt(I)``;
    diffraction data needs ``init_mode="random_phase"`` (uniform phases drawn
    from ``seed``, defaulting to ``cfg.seed``).
    """
    z_list = [float(z) for z in z_list]
    cons = _constraints_for(cfg, len(z_list))
    if m.geometry.mode == DIFFRACTION and cfg.init_mode != "random_phase":
        raise UsageError("diffraction data needs random_phase initialization")
    model = _Model(m, z_list)
    d = model.amp.astype(np.complex128)
    if cfg.init_mode == "random_phase":
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        phase = rng.random(m.grid.shape)
        if model.far:
            phase = sfft.ifftshift(phase)
        d = d * np.exp(2j * np.pi * phase)
    exit_wave = model.from_detector(d)
    ts = []
    for p, z in enumerate(z_list):
        u = model.prop(exit_wave, z - z_list[-1])
        ts.append(cons[p].project(u))
    return _stack_from(m, z_list, ts)


def iterate(m: Measurement, stack: SliceStack, cfg: MiprConfig, seed_used=None) -> ReconstructionResult:
    """Run ``cfg.iterations`` rounds of the multislice update starting from ``stack``."""
    if stack.grid != m.grid:
        raise UsageError("stack and measurement grids differ")
    P = len(stack)
    if P == 0:
        raise UsageError("cannot reconstruct an empty stack")
    cons = _constraints_for(cfg, P)
    dtype = PRECISIONS[cfg.precision]
    model = _Model(m, stack.z, dtype)
    eps = cfg.division_epsilon
    ts = [t.astype(dtype) for t in stack.transmissions]
    history = []
    for it in range(cfg.iterations):
        befores, d = model.forward(ts)
        d_new, mod = model.replace_amplitude(d)
        err = model.error(mod, cfg.error_mode)
        if not np.isfinite(err) and cfg.error_mode == "ratio_of_sums":
            raise DivergedError(it, seed_used)
        history.append(err)

        back = model.from_detector(d_new)
        for p in range(P - 1, 0, -1):
            ts[p] = cons[p].project(_divide(back, befores[p], eps))
            b = _divide(back, ts[p], eps)
            back = model.prop(b, -model.gaps[p - 1])
        ts[0] = cons[0].project(back)
        if not np.all(np.isfinite(ts[0])):
            raise DivergedError(it, seed_used)

        if cfg.tolerance is not None and it and abs(history[-2] - err) < cfg.tolerance:
            break
    ts = [c.project(t.astype(np.complex128)) for c, t in zip(cons, ts)]
    return ReconstructionResult(
        stack=stack.with_transmissions(ts),
        error_history=np.asarray(history),
        final_error=float(history[-1]),
        seed_used=cfg.seed if seed_used is None else seed_used,
    )


def reconstruct(m: Measurement, z_list, cfg: MiprConfig, seed=None) -> ReconstructionResult:
    """:func:`initialize` followed by :func:`iterate` with one seed."""
    seed = cfg.seed if seed is None else seed
    start = initialize(m, z_list, cfg, seed)
    return iterate(m, start, cfg, seed_used=seed)


def residual_error(m: Measurement, stack: SliceStack, mode="ratio_of_sums") -> float:
    """Amplitude misfit ``sum|F_meas - F_fit| / sum|F_fit|`` over valid pixels.

    ``mode="per_pixel"`` sums ``|F_meas - F_fit| / |F_fit|`` pixel by pixel
    instead.
    """
    if not m.valid_mask.any():
        raise UsageError("error undefined: every detector pixel is masked")
    model = _Model(m, stack.z)
    _, d = model.forward(stack.transmissions)
    return model.error(np.abs(d), mode)


def _run_one(args):
    m, z_list, cfg, seed = args
    try:
        return reconstruct(m, z_list, cfg, seed)
    except DivergedError as exc:
        return exc


def multi_start(m: Measurement, z_list, cfg: MiprConfig) -> ReconstructionResult:
    """Best (minimal final error) of ``cfg.restarts`` independent runs.

    Runs use seeds ``cfg.seed + k``; ties go to the lower seed.  Diverged runs
    are skipped unless all of them diverge, in which case the first
    :class:`DivergedError` is raised with every seed in ``failed_seeds``.
    """
    jobs = [(m, list(z_list), cfg, cfg.seed + k) for k in range(cfg.restarts)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    good = [r for r in results if isinstance(r, ReconstructionResult)]
    if not good:
        exc = results[0]
        exc.failed_seeds = [r.seed for r in results]
        raise exc
    for r in results:
        if isinstance(r, DivergedError):
            log.warning("restart diverged: %s", r)
    return min(good, key=lambda r: (r.final_error, r.seed_used))


def refine_z(m: Measurement, z_candidates, cfg: MiprConfig):
    """Pick the plane positions whose best reconstruction fits the data best.

    Returns ``(best_z_list, errors)`` with one error per candidate, in order.
    """
    z_candidates = [list(map(float, zs)) for zs in z_candidates]
    if not z_candidates:
        raise UsageError("need at least one z candidate")
    errors = [multi_start(m, zs, cfg).final_error for zs in z_candidates]
    best = int(np.argmin(errors))
    return z_candidates[best], errors


def conventional(m: Measurement, z_list) -> SliceStack:
    """Plain backpropagation of a hologram to each plane (the classical baseline)."""
    ts = [backpropagate(m, z).values for z in z_list]
    return SliceStack(m.grid, tuple(ts), tuple(z_list))
