"""Twisted bilayer lattice with vacancies in the second layer, from one
electron diffraction pattern.

Starts from the defect-free lattices, fixes the amplitude to one, clamps the
phase to [0, 0.5] rad inside a round patch, and reports the phase left at
the deleted sites.
"""

import numpy as np

from mipr3d.constraints import ConstraintSet, PlaneConstraint
from mipr3d.forward import RecordingGeometry, record
from mipr3d.mipr import MiprConfig, iterate
from mipr3d.samplegen import NoiseSpec, bilayer_phantom, honeycomb_sites
from mipr3d.wavefield import Grid, electron_wavelength

from _common import parser, save_stack, setup_logging


def site_phase(t, grid, sites):
    c = grid.n // 2
    rows = np.rint(sites[:, 1] / grid.pitch).astype(int) + c
    cols = np.rint(sites[:, 0] / grid.pitch).astype(int) + c
    return np.angle(t[rows, cols])


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--twist", type=float, default=7.0, help="degrees")
    p.add_argument("--spacing", type=float, default=0.335, help="interlayer distance (nm)")
    p.add_argument("--defect", type=float, nargs=2, action="append",
                   help="x y (nm) of a vacancy in layer 2; repeatable")
    a = p.parse_args()
    setup_logging()

    defects = a.defect or [(0.9, 0.4), (-0.7, 0.8), (0.2, -1.1)]
    grid = Grid(400, 0.025, electron_wavelength(80.0))
    truth = bilayer_phantom(grid, a.twist, a.spacing, defects=defects)
    perfect = bilayer_phantom(grid, a.twist, a.spacing)
    m = record(truth, RecordingGeometry("diffraction"), NoiseSpec(a.snr, a.noise_seed))
    x, y = grid.meshgrid()
    con = PlaneConstraint(support=np.hypot(x, y) < 2.0, amplitude_fixed=1.0, phase_mode="clamp", phase_max=0.5)
    start = perfect.with_transmissions([con.project(t) for t in perfect.transmissions])
    r = iterate(m, start, MiprConfig(iterations=a.iterations, constraints=ConstraintSet([con, con])))

    sites = honeycomb_sites(2.0, 0.246, a.twist)
    gone = [int(np.argmin(np.hypot(sites[:, 0] - dx, sites[:, 1] - dy))) for dx, dy in defects]
    kept = np.delete(sites, gone, axis=0)
    kept = kept[np.hypot(kept[:, 0], kept[:, 1]) < 1.8]
    l1 = honeycomb_sites(2.0, 0.246, 0.0)
    l1 = l1[np.hypot(l1[:, 0], l1[:, 1]) < 1.8]
    t1, t2 = r.stack.transmissions
    print(f"final error {r.final_error:.4f}")
    print("layer 2 phase at vacancies:", np.round(site_phase(t2, grid, sites[gone]), 3),
          f"lattice mean {site_phase(t2, grid, kept).mean():.3f} rad")
    ph1 = site_phase(t1, grid, l1)
    print(f"layer 1 site phase: mean {ph1.mean():.3f}, weakest {ph1.min():.3f} rad")
    save_stack(a.out, "truth", truth)
    save_stack(a.out, "mipr", r.stack)


if __name__ == "__main__":
    main()
