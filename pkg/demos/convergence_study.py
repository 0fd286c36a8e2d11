"""Convergence of the unfitted scheme on the circle and the channel.

Runs example 1 (disk, pure flux data) and example 2 in both its unfitted
and boundary-fitted form, then prints errors and observed orders.

    python3 demos/convergence_study.py
"""
from cutdarcy.harness import ExperimentConfig, compute_eoc, run_experiment

LEVELS = (10, 20, 40, 80)


def show(example):
    rows = run_experiment(ExperimentConfig(example=example, nx=LEVELS))
    print(f"\nexample {example}")
    print(f"{'nx':>4} {'|u-u_h|':>11} {'|p-p_h|':>11} {'|div e|':>11} {'condest':>10}")
    for r in rows:
        print(f"{r.nx:4d} {r.err_u_L2:11.3e} {r.err_p_L2:11.3e} {r.err_div_L2:11.3e} "
              f"{r.condest:10.2e}")
    hs = [r.h for r in rows]
    for key in ("err_u_L2", "err_p_L2", "err_div_L2"):
        rates = compute_eoc([getattr(r, key) for r in rows], hs)
        print(f"  EOC {key}: " + " ".join(f"{e:.2f}" for e in rates))


if __name__ == "__main__":
    for ex in ("1", "2", "2-fitted"):
        show(ex)
