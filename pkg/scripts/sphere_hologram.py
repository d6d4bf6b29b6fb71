"""Four weak phase spheres in four planes from one in-line hologram.

Tight masks are cut from the backpropagated field around each sphere, then
MIPR recovers the phase. The peak phase is read from a least-squares fit of
the spherical chord profile.
"""

import numpy as np

from mipr3d.constraints import ConstraintSet, PlaneConstraint, object_mask
from mipr3d.forward import RecordingGeometry, backpropagate, record
from mipr3d.metrics import chord_peak_phase, normalize_background
from mipr3d.mipr import MiprConfig, conventional, reconstruct
from mipr3d.samplegen import NoiseSpec, sphere_phantom
from mipr3d.wavefield import Grid

from _common import parser, row, save_stack, setup_logging

SPHERES = [(-50, -50, 0.0), (50, -50, 50.0), (-50, 50, 100.0), (50, 50, 150.0)]


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--smooth", type=float, default=3.0)
    p.add_argument("--dilation", type=int, default=6)
    a = p.parse_args()
    setup_logging()

    grid = Grid(400, 1.0, 0.532)
    truth = sphere_phantom(grid, SPHERES, 20.0, 0.1, 0.5)
    m = record(truth, RecordingGeometry("hologram", 200.0), NoiseSpec(a.snr, a.noise_seed))
    c = grid.n // 2
    masks = [object_mask(backpropagate(m, z), (c + y, c + x), 20, a.threshold, a.dilation, smooth=a.smooth)
             for x, y, z in SPHERES]
    r = reconstruct(m, truth.z, MiprConfig(iterations=a.iterations,
                                           constraints=ConstraintSet(PlaneConstraint(support=k) for k in masks)))
    base = conventional(m, truth.z)
    print(row("mask/sphere", [k.sum() / (np.pi * 10**2) for k in masks]))
    print(row("backprop", [chord_peak_phase(normalize_background(t), grid, (x, y), 20.0)
                           for t, (x, y, _) in zip(base.transmissions, SPHERES)]))
    print(row("mipr", [chord_peak_phase(t, grid, (x, y), 20.0) for t, (x, y, _) in zip(r.stack.transmissions, SPHERES)]))
    save_stack(a.out, "mipr", r.stack)
    save_stack(a.out, "backprop", base)


if __name__ == "__main__":
    main()
