"""Command-line pipeline: ``mipr3d {simulate,reconstruct,backprop,refine-z,render}``.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical
divergence, 4 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import pipeline
from .config import RunConfig, load_config
from .errors import ConfigError, DimensionError, DivergedError, FormatError, MiprError
from .forward import HOLOGRAM, Measurement, backpropagate
from .metrics import gradient_energy
from .mipr import refine_z
from .raster import read_intensity, read_raster, write_raster
from .samplegen import SliceStack

log = logging.getLogger("mipr3d")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4


# -- file helpers -----------------------------------------------------------

def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(out, command, cfg: RunConfig, files, **extra):
    """Config echo, effective seeds and output hashes; enough to rerun the command."""
    doc = {
        "command": command,
        "config": cfg.to_dict(),
        "seeds": {"noise": cfg.noise.seed, "mipr": cfg.mipr.seed},
        "files": {Path(f).name: _sha256(f) for f in files},
        **extra,
    }
    _write_json(Path(out) / "manifest.json", doc)


def _input_hashes(cfg: RunConfig, source):
    """Content hashes of the measurement files a command read.

    Hashes rather than paths, so a rerun from another directory reproduces
    the manifest byte for byte.
    """
    if source is None:
        source = cfg.sample.params["intensity"]
    source = Path(source)
    if source.is_dir():
        files = [source / "intensity.msf", source / "valid_mask.msf", *sorted(source.glob("truth_*.msf"))]
    else:
        files = [source]
    return {f.name: _sha256(f) for f in files if f.exists()}


def _plane_name(prefix, p):
    return f"{prefix}_{p:02d}.msf"


def _write_stack(out, prefix, stack: SliceStack):
    g = stack.grid
    files = []
    for p, t in enumerate(stack.transmissions):
        f = Path(out) / _plane_name(prefix, p)
        write_raster(f, t.astype(np.complex64), g.pitch, g.wavelength)
        files.append(f)
    return files


def _read_mask(path):
    return read_raster(path).data != 0


def _check_grid(raster, cfg: RunConfig, what):
    g = cfg.grid
    h, w = raster.data.shape
    if (h, w) != (g.n, g.n) or not math.isclose(raster.pitch, g.pitch, rel_tol=1e-9) \
            or not math.isclose(raster.wavelength, g.wavelength, rel_tol=1e-9):
        raise DimensionError(
            f"{what} is {w}x{h} with pitch {raster.pitch}, wavelength {raster.wavelength}; "
            f"config grid is {g.n}x{g.n} with pitch {g.pitch}, wavelength {g.wavelength}")


def _load_measurement(cfg: RunConfig, source, z_list):
    """Measurement plus (when the source is a simulate directory) the true stack."""
    grid = pipeline.grid_of(cfg)
    geom = pipeline.geometry_of(cfg)
    truth = None
    if source is None:
        if cfg.sample is None or cfg.sample.generator != "file":
            raise ConfigError("no --input given and sample is not a file", ("sample",))
        source = cfg.sample.params["intensity"]
    source = Path(source)
    mask = None
    if source.is_dir():
        inten = read_intensity(source / "intensity.msf")
        if (source / "valid_mask.msf").exists():
            mask = _read_mask(source / "valid_mask.msf")
        planes = sorted(source.glob("truth_*.msf"))
        if planes:
            ts = []
            for f in planes:
                r = read_raster(f)
                _check_grid(r, cfg, f.name)
                ts.append(r.data.astype(np.complex128))
            if len(ts) == len(z_list):
                truth = SliceStack(grid, tuple(ts), tuple(z_list))
    else:
        inten = read_intensity(source, cfg.grid.pitch, cfg.grid.wavelength)
    _check_grid(inten, cfg, str(source))
    if mask is None:
        mask = np.ones(grid.shape, bool)
    m = Measurement(grid, inten.data.astype(float), mask, geom, tuple(z_list))
    return m, truth


# -- commands ---------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, args):
    out = Path(args.out)
    stack, m = pipeline.simulate(cfg)
    g = stack.grid
    files = [out / "intensity.msf", out / "valid_mask.msf"]
    write_raster(files[0], m.intensity.astype(np.float32), g.pitch, g.wavelength)
    write_raster(files[1], m.valid_mask.astype(np.float32), g.pitch, g.wavelength)
    files += _write_stack(out, "truth", stack)
    _manifest(out, "simulate", cfg, files, noise_free=cfg.noise.snr is None, z=list(stack.z))
    return EXIT_OK


def _write_history(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "error"])
        for k, e in enumerate(history, start=1):
            w.writerow([k, repr(float(e))])


def cmd_reconstruct(cfg: RunConfig, args):
    out = Path(args.out)
    z_list = pipeline.plane_positions(cfg)
    m, truth = _load_measurement(cfg, args.input, z_list)
    t0 = time.perf_counter()
    try:
        result = pipeline.run_reconstruction(cfg, m, z_list, truth, _read_mask, workers=args.threads)
    except DivergedError as exc:
        failed = getattr(exc, "failed_seeds", [exc.seed])
        _write_json(out / "summary.json", {"diverged": True, "failed_seeds": failed, "error": str(exc)})
        raise
    wall = time.perf_counter() - t0
    files = _write_stack(out, "plane", result.stack)
    files.append(out / "errors.csv")
    _write_history(files[-1], result.error_history)
    summary = {
        "final_error": result.final_error,
        "seed": result.seed_used,
        "restarts": cfg.mipr.restarts,
        "iterations": int(len(result.error_history)),
        "wall_time_s": wall,
    }
    _write_json(out / "summary.json", summary)
    _manifest(out, "reconstruct", cfg, files, inputs=_input_hashes(cfg, args.input))
    return EXIT_OK


def cmd_backprop(cfg: RunConfig, args):
    out = Path(args.out)
    if args.z:
        zs = list(args.z)
    elif cfg.z.sweep is not None:
        zs = cfg.z.sweep_values()
    elif cfg.z.list is not None:
        zs = list(cfg.z.list)
    else:
        raise ConfigError("give --z, z.list or z.sweep", ("z",))
    if cfg.geometry.mode != HOLOGRAM:
        raise ConfigError("backpropagation needs hologram data", ("geometry", "mode"))
    # the detector sits detector_distance behind the last reconstruction plane
    ref = list(cfg.z.list) if cfg.z.list is not None else [0.0]
    m, _ = _load_measurement(cfg, args.input, ref)
    g = m.grid
    files, rows = [], []
    for k, z in enumerate(zs):
        u = backpropagate(m, z)
        for part, arr in (("amp", u.amplitude), ("phase", u.phase)):
            f = out / f"backprop_{k:03d}_{part}.msf"
            write_raster(f, arr.astype(np.float32), g.pitch, g.wavelength)
            files.append(f)
        rows.append((z, gradient_energy(u)))
    with open(out / "focus.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "gradient_energy"])
        for z, e in rows:
            w.writerow([repr(float(z)), repr(e)])
    files.append(out / "focus.csv")
    _manifest(out, "backprop", cfg, files, z=[float(z) for z in zs], inputs=_input_hashes(cfg, args.input))
    return EXIT_OK


def cmd_refine_z(cfg: RunConfig, args):
    out = Path(args.out)
    if cfg.z.candidates is None:
        raise ConfigError("refine-z needs z.candidates", ("z", "candidates"))
    cands = [list(c) for c in cfg.z.candidates]
    sizes = {len(c) for c in cands}
    if len(sizes) != 1:
        raise ConfigError("all candidates need the same number of planes", ("z", "candidates"))
    m, truth = _load_measurement(cfg, args.input, cands[0])
    cons = pipeline.build_constraints(cfg, m, cands[0], truth, _read_mask)
    mc = pipeline.mipr_config(cfg, cons, args.threads)
    best, errors = refine_z(m, cands, mc)
    with open(out / "refine_z.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["candidate", "z", "error"])
        for k, (c, e) in enumerate(zip(cands, errors)):
            w.writerow([k, " ".join(repr(float(z)) for z in c), repr(float(e))])
    _write_json(out / "summary.json", {"best_z": best, "errors": errors})
    _manifest(out, "refine-z", cfg, [out / "refine_z.csv"], inputs=_input_hashes(cfg, args.input))
    return EXIT_OK


def _to_u16(a, lo, hi):
    if not hi > lo:
        return np.full(a.shape, 32768, np.uint16)
    x = (np.clip(a, lo, hi) - lo) / (hi - lo)
    return np.round(x * 65535).astype(np.uint16)


def render_array(a, path, log_scale=False, value_range=None, label="value"):
    """Write ``a`` as a 16-bit grayscale PNG with a JSON sidecar describing the mapping."""
    from PIL import Image

    a = np.asarray(a, dtype=float)
    mapping = "linear"
    if log_scale:
        a = np.log10(1 + np.clip(a, 0, None))
        mapping = "log10(1+I)"
    lo, hi = value_range if value_range is not None else (float(a.min()), float(a.max()))
    Image.fromarray(_to_u16(a, lo, hi)).save(path)
    sidecar = Path(path).with_suffix(".json")
    _write_json(sidecar, {"quantity": label, "mapping": mapping, "range": [lo, hi]})
    return [Path(path), sidecar]


def cmd_render(cfg, args):
    out = Path(args.out)
    files = []
    for src in args.files:
        src = Path(src)
        r = read_raster(src)
        stem = out / src.stem
        if r.is_complex:
            files += render_array(np.abs(r.data), f"{stem}_amp.png", args.log, label="amplitude")
            files += render_array(np.angle(r.data), f"{stem}_phase.png", False, (-math.pi, math.pi),
                                  label="phase")
        else:
            files += render_array(r.data, f"{stem}.png", args.log, label="intensity" if args.log else "value")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _common(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="run configuration (JSON)")
    p.add_argument("--out", default=d if suppress else ".", help="output directory")
    p.add_argument("--seed", type=int, default=d, help="override noise and reconstruction seeds")
    p.add_argument("--threads", type=int, default=d if suppress else 1,
                   help="worker processes for restarts and FFT threads")
    p.add_argument("-v", "--verbose", action="store_true", default=d if suppress else False)


def build_parser():
    parser = argparse.ArgumentParser(prog="mipr3d", description=__doc__.splitlines()[0])
    _common(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="phantom and detector intensity")
    _common(p, True)
    p = sub.add_parser("reconstruct", help="multislice phase retrieval")
    _common(p, True)
    p.add_argument("--input", help="simulate output directory or intensity file (MSF1 or PNG)")
    p = sub.add_parser("backprop", help="conventional backpropagation to one or more z")
    _common(p, True)
    p.add_argument("--input")
    p.add_argument("--z", type=float, action="append", help="plane position (repeatable)")
    p = sub.add_parser("refine-z", help="compare candidate plane positions by residual error")
    _common(p, True)
    p.add_argument("--input")
    p = sub.add_parser("render", help="16-bit PNG export of MSF1 files")
    _common(p, True)
    p.add_argument("files", nargs="+")
    p.add_argument("--log", action="store_true", help="log10(1+I) mapping for real files")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "backprop": cmd_backprop,
    "refine-z": cmd_refine_z,
    "render": cmd_render,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = None
        if args.command != "render":
            if args.config is None:
                raise ConfigError(f"{args.command} needs --config")
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
        try:
            Path(args.out).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise FormatError(f"cannot create output directory {args.out}: {exc}") from exc
        with sfft.set_workers(args.threads):
            return COMMANDS[args.command](cfg, args)
    except MiprError as exc:
        print(f"mipr3d {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code in (EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO) else EXIT_CONFIG
    except OSError as exc:
        print(f"mipr3d {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
