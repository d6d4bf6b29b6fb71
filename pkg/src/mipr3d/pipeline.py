"""Turn a :class:`RunConfig` into phantoms, measurements and constraint sets."""

from __future__ import annotations

import math

import numpy as np

from .config import PlaneRules, RunConfig
from .constraints import ConstraintSet, PlaneConstraint, loose_mask, object_mask, tight_mask
from .errors import ConfigError, DimensionError, MiprError
from .forward import DIFFRACTION, Measurement, RecordingGeometry, backpropagate, record
from .mipr import MiprConfig, ReconstructionResult, iterate, multi_start
from .samplegen import NoiseSpec, SliceStack, bilayer_phantom, letters_phantom, sphere_phantom
from .wavefield import Grid

__all__ = [
    "grid_of",
    "geometry_of",
    "plane_positions",
    "build_stack",
    "simulate",
    "build_constraints",
    "mipr_config",
    "run_reconstruction",
]


def grid_of(cfg: RunConfig) -> Grid:
    g = cfg.grid
    return Grid(g.n, g.pitch, g.wavelength)


def geometry_of(cfg: RunConfig) -> RecordingGeometry:
    g = cfg.geometry
    try:
        return RecordingGeometry(g.mode, g.detector_distance, g.beamstop_radius)
    except MiprError as exc:
        raise ConfigError(str(exc), ("geometry",)) from None


def plane_positions(cfg: RunConfig):
    """Plane z values: ``z.list`` if given, else whatever the generator implies."""
    if cfg.z.list is not None:
        return list(cfg.z.list)
    s = cfg.sample
    if s is not None and s.generator == "spheres":
        return sorted({float(sp[2]) for sp in s.params["spheres"]})
    if s is not None and s.generator == "bilayer":
        return [s.params["z0"], s.params["z0"] + s.params["spacing"]]
    raise ConfigError("plane positions needed", ("z", "list"))


def build_stack(cfg: RunConfig, perfect=False) -> SliceStack:
    """Ground-truth phantom; ``perfect`` drops bilayer defects."""
    s = cfg.sample
    if s is None or s.generator == "file":
        raise ConfigError("a generator sample is needed", ("sample", "generator"))
    grid = grid_of(cfg)
    p = s.params
    if s.generator == "letters":
        return letters_phantom(grid, plane_positions(cfg), p["glyphs"], p["height"], p["positions"])
    if s.generator == "spheres":
        return sphere_phantom(grid, p["spheres"], p["diameter"], p["a_max"], p["phi_max"])
    kw = {k: v for k, v in p.items() if k != "defects"}
    return bilayer_phantom(grid, defects=() if perfect else p["defects"], **kw)


def simulate(cfg: RunConfig):
    """Phantom and its recorded measurement."""
    stack = build_stack(cfg)
    snr = math.inf if cfg.noise.snr is None else cfg.noise.snr
    m = record(stack, geometry_of(cfg), NoiseSpec(snr, cfg.noise.seed))
    return stack, m


def _disc(grid, center, radius):
    x, y = grid.meshgrid()
    return np.hypot(x - center[0], y - center[1]) < radius


def _support(rules: PlaneRules, p, z, grid, m, truth, read_mask):
    path = ("constraints", "planes", p)
    if rules.support == "none":
        return None
    if rules.support == "loose":
        if truth is None:
            raise ConfigError("loose support needs the true planes (simulated data)", path)
        return loose_mask(truth.transmissions[p], rules.scale, rules.threshold)
    if rules.support == "disc":
        return _disc(grid, rules.center, rules.radius)
    if rules.support == "file":
        mask = read_mask(rules.path)
        if mask.shape != grid.shape:
            raise DimensionError(f"mask {rules.path} is {mask.shape}, grid is {grid.shape}")
        return mask
    if m.geometry.mode == DIFFRACTION:
        raise ConfigError("tight support needs hologram data", path)
    field = backpropagate(m, z)
    kw = dict(smooth=rules.smooth, closing=rules.closing, min_size=rules.min_size)
    if rules.centers is None:
        return tight_mask(field, rules.threshold, rules.dilation, **kw)
    masks = []
    for cx, cy in rules.centers:
        center = (grid.n // 2 + cy / grid.pitch, grid.n // 2 + cx / grid.pitch)
        masks.append(object_mask(field, center, rules.window, rules.threshold, rules.dilation, **kw))
    return np.logical_or.reduce(masks)


def build_constraints(cfg: RunConfig, m: Measurement, z_list, truth=None, read_mask=None) -> ConstraintSet:
    rules = cfg.rules_for(len(z_list))
    out = []
    for p, (r, z) in enumerate(zip(rules, z_list)):
        support = _support(r, p, z, m.grid, m, truth, read_mask)
        out.append(PlaneConstraint(
            support=support,
            outside_value=r.outside_value,
            amplitude_max=r.amplitude_max,
            phase_mode=r.phase_mode,
            phase_max=r.phase_max,
            amplitude_fixed=r.amplitude_fixed,
        ))
    return ConstraintSet(out)


def mipr_config(cfg: RunConfig, constraints, workers=1) -> MiprConfig:
    s = cfg.mipr
    init = "backpropagate" if s.init_mode == "perfect_lattice" else s.init_mode
    return MiprConfig(
        iterations=s.iterations,
        constraints=constraints,
        init_mode=init,
        restarts=s.restarts,
        seed=s.seed,
        division_epsilon=s.division_epsilon,
        error_mode=s.error_mode,
        tolerance=s.tolerance,
        workers=workers,
        precision=s.precision,
    )


def run_reconstruction(cfg: RunConfig, m: Measurement, z_list, truth=None, read_mask=None,
                       workers=1) -> ReconstructionResult:
    """Constraints from the config, then MIPR with the configured start."""
    if m.grid != grid_of(cfg):
        raise DimensionError(f"measurement grid {m.grid} differs from config grid {grid_of(cfg)}")
    cons = build_constraints(cfg, m, z_list, truth, read_mask)
    mc = mipr_config(cfg, cons, workers)
    if cfg.mipr.init_mode == "perfect_lattice":
        if cfg.sample is None or cfg.sample.generator != "bilayer":
            raise ConfigError("perfect_lattice start needs a bilayer sample", ("mipr", "init_mode"))
        start = build_stack(cfg, perfect=True)
        start = start.with_transmissions([c.project(t) for c, t in zip(cons, start.transmissions)])
        return iterate(m, start, mc)
    return multi_start(m, z_list, mc)
