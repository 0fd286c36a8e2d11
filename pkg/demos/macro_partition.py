"""Macroelement partition of a cut disk, with local mass balance.

Builds the partition for a few mesh sizes, reports how many small cut
elements were attached to large ones, and checks the mass balance
int_M (div u_h - g) on every macroelement when only macro faces are
stabilized.

    python3 demos/macro_partition.py [--plot macro.png]
"""
import argparse

import numpy as np

from cutdarcy.assembly import StabilizationConfig, assemble_system
from cutdarcy.fespace import DofLayout, velocity_divergence, volume_points
from cutdarcy.harness import manufactured_solution, solve_system
from cutdarcy.macro import build_macro_partition
from cutdarcy.mesh import extract_active_mesh


def balance(nx, stab):
    ex = manufactured_solution("1")
    am = extract_active_mesh(ex.mesh(nx), ex.geometry)
    lay = DofLayout.build(am, 1, mean=True)
    part = build_macro_partition(am, stab.delta)
    sol = solve_system(assemble_system(am, lay, ex.data, stab, macro=part))
    div = velocity_divergence(sol.velocity)
    els, pts, wts = volume_points(am, stab.volume_order)
    idx = np.searchsorted(part.roots, part.assignment[els])
    defect = np.bincount(idx, weights=(div[lay.pressure_dof[els]] - ex.g(pts)) * wts)
    return am, part, np.abs(defect).max()


def plot(am, part, path):
    import matplotlib.pyplot as plt
    from matplotlib.collections import PolyCollection

    bg = am.background
    act = am.active_elements
    colors = np.random.default_rng(0).random((bg.n_elements, 3))
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.add_collection(PolyCollection(bg.vertices[bg.triangles[act]],
                                     facecolors=colors[part.assignment[act]],
                                     edgecolors="k", linewidths=0.2))
    ax.set_aspect("equal")
    ax.autoscale()
    fig.savefig(path, dpi=150)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--plot", help="save a picture of the finest partition")
    args = ap.parse_args()
    stab = StabilizationConfig(face_mode="macro")
    for nx in (10, 20, 40):
        am, part, worst = balance(nx, stab)
        moved = np.count_nonzero(part.assignment[am.active_elements] != am.active_elements)
        print(f"nx={nx:3d} macroelements={len(part.roots):5d} attached={moved:4d} "
              f"max |int_M (div u_h - g)| = {worst:.2e}")
    if args.plot:
        plot(am, part, args.plot)
