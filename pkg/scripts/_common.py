"""Small helpers shared by the experiment scripts."""

import argparse
import logging
from pathlib import Path

import numpy as np

from mipr3d.raster import write_raster


def parser(doc):
    p = argparse.ArgumentParser(description=doc, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--snr", type=float, default=10.0, help="use inf for noise-free data")
    p.add_argument("--noise-seed", type=int, default=1)
    p.add_argument("--out", type=Path, help="directory for MSF1 rasters (render them with `mipr3d render`)")
    return p


def setup_logging():
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s", datefmt="%H:%M:%S")


def save_stack(out, prefix, stack):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    g = stack.grid
    for p, t in enumerate(stack.transmissions):
        write_raster(out / f"{prefix}_{p:02d}.msf", np.asarray(t, np.complex64), g.pitch, g.wavelength)


def row(label, values, width=8):
    return f"{label:<14}" + "".join(f"{v:>{width}.3f}" for v in values)
