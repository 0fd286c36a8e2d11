"""Log-log plot of the error columns of a CSV written by ``cutdarcy run``.

    cutdarcy run --example 1 --nx 10,20,40,80 --out ex1.csv
    python3 demos/plot_convergence.py ex1.csv ex1.png
"""
import csv
import sys

import matplotlib.pyplot as plt
import numpy as np

if __name__ == "__main__":
    src, dst = sys.argv[1], sys.argv[2]
    with open(src) as fh:
        rows = list(csv.DictReader(fh))
    h = np.array([float(r["h"]) for r in rows])
    fig, ax = plt.subplots()
    for key in ("err_u_L2", "err_p_L2", "err_div_L2"):
        ax.loglog(h, [float(r[key]) for r in rows], "o-", label=key)
    ax.loglog(h, h / h[0] * float(rows[0]["err_u_L2"]), "k--", label="O(h)")
    ax.set_xlabel("h")
    ax.legend()
    fig.savefig(dst, dpi=150)
