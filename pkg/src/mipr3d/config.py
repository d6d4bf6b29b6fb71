"""Run configuration: a JSON document parsed into frozen dataclasses.

Unknown keys are rejected and every error names the dotted path of the
offending key. Example::

    {
      "grid": {"n": 400, "pitch": 1.0, "wavelength": 0.532},
      "sample": {"generator": "letters", "glyphs": "ABCD"},
      "geometry": {"mode": "hologram", "detector_distance": 200},
      "noise": {"snr": 10, "seed": 1},
      "mipr": {"iterations": 1000},
      "constraints": {"default": {"support": "loose", "amplitude_max": 1, "phase_mode": "zero"}},
      "z": {"list": [0, 50, 100, 150]}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .constraints import PHASE_MODES
from .errors import ConfigError
from .forward import DIFFRACTION, HOLOGRAM
from .mipr import ERROR_MODES, INIT_MODES, PRECISIONS

__all__ = [
    "GridConfig",
    "SampleConfig",
    "GeometryConfig",
    "NoiseConfig",
    "MiprSection",
    "PlaneRules",
    "ZConfig",
    "RunConfig",
    "load_config",
    "parse_config",
]

GENERATORS = {
    "letters": {"glyphs": "", "height": None, "positions": None},
    "spheres": {"spheres": None, "diameter": None, "a_max": 0.0, "phi_max": 0.0},
    "bilayer": {
        "twist": 7.0,
        "spacing": 0.335,
        "phi_peak": 0.24,
        "patch_diameter": 4.0,
        "defects": [],
        "lattice_constant": 0.246,
        "bump_sigma": 0.05,
        "z0": 0.0,
    },
    "file": {"intensity": None},
}
SUPPORTS = ("none", "loose", "tight", "disc", "file")
INIT_CHOICES = INIT_MODES + ("perfect_lattice",)


# -- value checkers ---------------------------------------------------------

def _fields(d, path, allowed, required=()):
    if not isinstance(d, dict):
        raise ConfigError(f"expected an object, got {type(d).__name__}", path)
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}; allowed {sorted(allowed)}", path)
    for k in required:
        if k not in d:
            raise ConfigError("required key missing", path + (k,))
    return d


def _num(v, path, *, integer=False, positive=False, nonneg=False, optional=False):
    if v is None and optional:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", path)
    if integer and (not float(v).is_integer()):
        raise ConfigError(f"expected an integer, got {v!r}", path)
    if not math.isfinite(v) and not (positive and v == math.inf):
        raise ConfigError(f"expected a finite number, got {v!r}", path)
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v!r}", path)
    if nonneg and v < 0:
        raise ConfigError(f"must be nonnegative, got {v!r}", path)
    return int(v) if integer else float(v)


def _choice(v, path, choices):
    if v not in choices:
        raise ConfigError(f"must be one of {list(choices)}, got {v!r}", path)
    return v


def _numlist(v, path, **kw):
    if not isinstance(v, list):
        raise ConfigError("expected a list", path)
    return tuple(_num(x, path + (i,), **kw) for i, x in enumerate(v))


def _pairs(v, path, width):
    if not isinstance(v, list):
        raise ConfigError("expected a list", path)
    out = []
    for i, item in enumerate(v):
        if not isinstance(item, list) or len(item) != width:
            raise ConfigError(f"expected a list of {width} numbers", path + (i,))
        out.append(_numlist(item, path + (i,)))
    return tuple(out)


def _complex(v, path):
    if isinstance(v, list):
        re, im = _pairs([v], path, 2)[0]
        return complex(re, im)
    return _num(v, path)


# -- sections ---------------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    n: int
    pitch: float
    wavelength: float

    @classmethod
    def parse(cls, d, path=("grid",)):
        _fields(d, path, ("n", "pitch", "wavelength"), ("n", "pitch", "wavelength"))
        n = _num(d["n"], path + ("n",), integer=True, positive=True)
        if n % 2:
            raise ConfigError(f"must be even, got {n}", path + ("n",))
        return cls(n, _num(d["pitch"], path + ("pitch",), positive=True),
                   _num(d["wavelength"], path + ("wavelength",), positive=True))


@dataclass(frozen=True)
class SampleConfig:
    generator: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, d, path=("sample",)):
        if not isinstance(d, dict):
            raise ConfigError("expected an object", path)
        gen = _choice(d.get("generator"), path + ("generator",), tuple(GENERATORS))
        defaults = GENERATORS[gen]
        _fields(d, path, ("generator",) + tuple(defaults))
        p = dict(defaults)
        p.update({k: v for k, v in d.items() if k != "generator"})
        q = path
        if gen == "letters":
            if not isinstance(p["glyphs"], str):
                raise ConfigError("expected a string", q + ("glyphs",))
            p["height"] = _num(p["height"], q + ("height",), integer=True, positive=True, optional=True)
            if p["positions"] is not None:
                p["positions"] = _pairs(p["positions"], q + ("positions",), 2)
        elif gen == "spheres":
            if p["spheres"] is None:
                raise ConfigError("required key missing", q + ("spheres",))
            p["spheres"] = _pairs(p["spheres"], q + ("spheres",), 3)
            p["diameter"] = _num(p["diameter"], q + ("diameter",), positive=True)
            p["a_max"] = _num(p["a_max"], q + ("a_max",), nonneg=True)
            p["phi_max"] = _num(p["phi_max"], q + ("phi_max",))
        elif gen == "bilayer":
            for k in ("twist", "spacing", "phi_peak", "z0"):
                p[k] = _num(p[k], q + (k,))
            for k in ("patch_diameter", "lattice_constant", "bump_sigma"):
                p[k] = _num(p[k], q + (k,), positive=True)
            p["spacing"] = _num(p["spacing"], q + ("spacing",), nonneg=True)
            p["defects"] = _pairs(p["defects"], q + ("defects",), 2)
        else:
            if not isinstance(p["intensity"], str):
                raise ConfigError("expected a file path", q + ("intensity",))
        return cls(gen, p)


@dataclass(frozen=True)
class GeometryConfig:
    mode: str = HOLOGRAM
    detector_distance: float = 0.0
    beamstop_radius: float | None = None

    @classmethod
    def parse(cls, d, path=("geometry",)):
        _fields(d, path, ("mode", "detector_distance", "beamstop_radius"))
        return cls(
            _choice(d.get("mode", HOLOGRAM), path + ("mode",), (HOLOGRAM, DIFFRACTION)),
            _num(d.get("detector_distance", 0.0), path + ("detector_distance",), nonneg=True),
            _num(d.get("beamstop_radius"), path + ("beamstop_radius",), nonneg=True, optional=True),
        )


@dataclass(frozen=True)
class NoiseConfig:
    snr: float | None = None
    seed: int = 0

    @classmethod
    def parse(cls, d, path=("noise",)):
        _fields(d, path, ("snr", "seed"))
        return cls(
            _num(d.get("snr"), path + ("snr",), positive=True, optional=True),
            _num(d.get("seed", 0), path + ("seed",), integer=True, nonneg=True),
        )


@dataclass(frozen=True)
class MiprSection:
    iterations: int = 1000
    restarts: int = 1
    seed: int = 0
    division_epsilon: float = 1e-8
    init_mode: str = "backpropagate"
    error_mode: str = "ratio_of_sums"
    tolerance: float | None = None
    precision: str = "single"

    @classmethod
    def parse(cls, d, path=("mipr",)):
        names = tuple(cls.__dataclass_fields__)
        _fields(d, path, names)
        out = cls()
        kw = {}
        for k in ("iterations", "restarts"):
            if k in d:
                kw[k] = _num(d[k], path + (k,), integer=True, positive=True)
        if "seed" in d:
            kw["seed"] = _num(d["seed"], path + ("seed",), integer=True, nonneg=True)
        if "division_epsilon" in d:
            kw["division_epsilon"] = _num(d["division_epsilon"], path + ("division_epsilon",), positive=True)
        if "tolerance" in d:
            kw["tolerance"] = _num(d["tolerance"], path + ("tolerance",), positive=True, optional=True)
        if "init_mode" in d:
            kw["init_mode"] = _choice(d["init_mode"], path + ("init_mode",), INIT_CHOICES)
        if "error_mode" in d:
            kw["error_mode"] = _choice(d["error_mode"], path + ("error_mode",), ERROR_MODES)
        if "precision" in d:
            kw["precision"] = _choice(d["precision"], path + ("precision",), tuple(PRECISIONS))
        return replace(out, **kw)


@dataclass(frozen=True)
class PlaneRules:
    """Support source and projection rules for one plane.

    ``support`` selects where the mask comes from: ``"loose"`` grows the
    true plane's footprint (simulations only), ``"tight"`` thresholds the
    backpropagated hologram, ``"disc"`` is a round region, ``"file"`` reads
    a real raster whose nonzero pixels form the mask.
    """

    support: str = "none"
    scale: float = 4.0
    threshold: float = 0.5
    dilation: int = 2
    smooth: float = 0.0
    closing: int = 0
    min_size: int = 1
    centers: tuple | None = None
    window: int = 20
    radius: float | None = None
    center: tuple = (0.0, 0.0)
    path: str | None = None
    outside_value: complex = 1.0
    amplitude_max: float | None = None
    amplitude_fixed: float | None = None
    phase_mode: str = "free"
    phase_max: float | None = None

    @classmethod
    def parse(cls, d, path, base=None):
        names = tuple(cls.__dataclass_fields__)
        _fields(d, path, names)
        out = base or cls()
        kw = {}
        for k, v in d.items():
            p = path + (k,)
            if k == "support":
                kw[k] = _choice(v, p, SUPPORTS)
            elif k in ("scale",):
                kw[k] = _num(v, p, positive=True)
                if kw[k] < 1:
                    raise ConfigError(f"must be >= 1, got {v}", p)
            elif k == "threshold":
                kw[k] = _num(v, p, positive=True)
                if kw[k] >= 1:
                    raise ConfigError(f"must lie in (0, 1), got {v}", p)
            elif k in ("dilation", "closing", "min_size", "window"):
                kw[k] = _num(v, p, integer=True, nonneg=True)
            elif k == "smooth":
                kw[k] = _num(v, p, nonneg=True)
            elif k == "centers":
                kw[k] = None if v is None else _pairs(v, p, 2)
            elif k == "radius":
                kw[k] = _num(v, p, positive=True, optional=True)
            elif k == "center":
                kw[k] = _pairs([v], p, 2)[0]
            elif k == "path":
                if v is not None and not isinstance(v, str):
                    raise ConfigError("expected a file path", p)
                kw[k] = v
            elif k == "outside_value":
                kw[k] = _complex(v, p)
            elif k in ("amplitude_max",):
                kw[k] = _num(v, p, positive=True, optional=True)
            elif k == "amplitude_fixed":
                kw[k] = _num(v, p, nonneg=True, optional=True)
            elif k == "phase_mode":
                kw[k] = _choice(v, p, PHASE_MODES)
            elif k == "phase_max":
                kw[k] = _num(v, p, nonneg=True, optional=True)
        out = replace(out, **kw)
        if out.phase_mode == "clamp" and out.phase_max is None:
            raise ConfigError("clamp mode needs phase_max", path)
        if out.support == "disc" and out.radius is None:
            raise ConfigError("disc support needs radius", path)
        if out.support == "file" and out.path is None:
            raise ConfigError("file support needs path", path)
        return out


@dataclass(frozen=True)
class ZConfig:
    list: tuple | None = None
    candidates: tuple | None = None
    sweep: tuple | None = None  # (start, stop, step), stop inclusive

    @classmethod
    def parse(cls, d, path=("z",)):
        _fields(d, path, ("list", "candidates", "sweep"))
        kw = {}
        if d.get("list") is not None:
            z = _numlist(d["list"], path + ("list",))
            if any(b < a for a, b in zip(z, z[1:])):
                raise ConfigError("plane positions must be nondecreasing", path + ("list",))
            kw["list"] = z
        if d.get("candidates") is not None:
            c = d["candidates"]
            if not isinstance(c, list) or not c:
                raise ConfigError("expected a nonempty list of z lists", path + ("candidates",))
            kw["candidates"] = tuple(_numlist(x, path + ("candidates", i)) for i, x in enumerate(c))
        if d.get("sweep") is not None:
            s = d["sweep"]
            sp = path + ("sweep",)
            _fields(s, sp, ("start", "stop", "step"), ("start", "stop", "step"))
            step = _num(s["step"], sp + ("step",), positive=True)
            kw["sweep"] = (_num(s["start"], sp + ("start",)), _num(s["stop"], sp + ("stop",)), step)
        return cls(**kw)

    def sweep_values(self):
        start, stop, step = self.sweep
        k = int(math.floor((stop - start) / step + 1e-9))
        return [start + i * step for i in range(k + 1)]


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    sample: SampleConfig | None = None
    geometry: GeometryConfig = GeometryConfig()
    noise: NoiseConfig = NoiseConfig()
    mipr: MiprSection = MiprSection()
    constraints: tuple = ()  # PlaneRules per plane; empty means "default for all"
    default_rules: PlaneRules = PlaneRules()
    z: ZConfig = ZConfig()

    def rules_for(self, count):
        if not self.constraints:
            return (self.default_rules,) * count
        if len(self.constraints) != count:
            raise ConfigError(f"{len(self.constraints)} plane entries for {count} planes",
                              ("constraints", "planes"))
        return self.constraints

    def with_seed(self, seed):
        """Copy with both the noise and the reconstruction seed replaced."""
        return replace(self, noise=replace(self.noise, seed=seed), mipr=replace(self.mipr, seed=seed))

    def to_dict(self):
        """JSON-ready dictionary that :func:`parse_config` maps back to this config."""
        def clean(x):
            if isinstance(x, complex):
                return [x.real, x.imag]
            if isinstance(x, float) and math.isinf(x):
                return None
            if isinstance(x, (tuple, list)):
                return [clean(v) for v in x]
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, np.generic):
                return x.item()
            return x

        d = {"grid": asdict(self.grid)}
        if self.sample is not None:
            d["sample"] = {"generator": self.sample.generator, **self.sample.params}
        d["geometry"] = asdict(self.geometry)
        d["noise"] = asdict(self.noise)
        d["mipr"] = asdict(self.mipr)
        cons = {"default": asdict(self.default_rules)}
        if self.constraints:
            cons["planes"] = [asdict(r) for r in self.constraints]
        d["constraints"] = cons
        d["z"] = {k: v for k, v in asdict(self.z).items() if v is not None}
        if "sweep" in d["z"]:
            d["z"]["sweep"] = dict(zip(("start", "stop", "step"), d["z"]["sweep"]))
        return clean(d)


def parse_config(d) -> RunConfig:
    _fields(d, (), ("grid", "sample", "geometry", "noise", "mipr", "constraints", "z"), ("grid",))
    kw = {"grid": GridConfig.parse(d["grid"])}
    if d.get("sample") is not None:
        kw["sample"] = SampleConfig.parse(d["sample"])
    if "geometry" in d:
        kw["geometry"] = GeometryConfig.parse(d["geometry"])
    if "noise" in d:
        kw["noise"] = NoiseConfig.parse(d["noise"])
    if "mipr" in d:
        kw["mipr"] = MiprSection.parse(d["mipr"])
    if "constraints" in d:
        c = _fields(d["constraints"], ("constraints",), ("default", "planes"))
        default = PlaneRules.parse(c.get("default", {}), ("constraints", "default"))
        kw["default_rules"] = default
        planes = c.get("planes")
        if planes is not None:
            if not isinstance(planes, list):
                raise ConfigError("expected a list", ("constraints", "planes"))
            kw["constraints"] = tuple(
                PlaneRules.parse(p, ("constraints", "planes", i), base=default) for i, p in enumerate(planes)
            )
    if "z" in d:
        kw["z"] = ZConfig.parse(d["z"])
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    """Read a config file, or the config echoed inside a run manifest."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if isinstance(d, dict) and "command" in d and "config" in d:
        # a run manifest: rerun with the exact configuration it echoes
        d = d["config"]
    return parse_config(d)
