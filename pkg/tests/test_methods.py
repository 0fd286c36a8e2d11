import numpy as np
import pytest

from cutdarcy.harness import ExperimentConfig, compute_eoc, run_experiment

LEVELS = (10, 20, 40, 80)


@pytest.fixture(scope="module")
def mixed_runs():
    return {m: run_experiment(ExperimentConfig(example="mixed", nx=LEVELS, method=m,
                                               condest=False))
            for m in ("lagrange", "penalty")}


def last_eoc(rows, key):
    return compute_eoc([getattr(r, key) for r in rows], [r.h for r in rows])[-1]


def test_lagrange_multiplier_converges_on_mixed_boundary(mixed_runs):
    assert last_eoc(mixed_runs["lagrange"], "err_u_L2") >= 0.9
    assert last_eoc(mixed_runs["lagrange"], "err_p_L2") >= 0.9


@pytest.mark.xfail(strict=True, reason="weak normal-flux penalty locks the lowest-order "
                   "flux space; velocity error scales with the penalty and decays like h^0.5")
def test_penalty_converges_on_mixed_boundary(mixed_runs):
    assert last_eoc(mixed_runs["penalty"], "err_u_L2") >= 0.9
    assert last_eoc(mixed_runs["penalty"], "err_p_L2") >= 0.9


def test_both_methods_give_the_same_divergence_error(mixed_runs):
    lag = [r.err_div_L2 for r in mixed_runs["lagrange"]]
    pen = [r.err_div_L2 for r in mixed_runs["penalty"]]
    np.testing.assert_allclose(pen, lag, rtol=1e-9)


def test_penalty_error_grows_with_penalty_parameter():
    errs = []
    for lam in (10.0, 100.0, 1000.0):
        rows = run_experiment(ExperimentConfig(example="mixed", nx=(20,), method="penalty",
                                               penalty=lam, condest=False))
        errs.append(rows[0].err_u_L2)
    assert np.all(np.diff(errs) > 0)
