import numpy as np
import pytest
from scipy.optimize import nnls

from carpetmod.errors import IterationLimit
from carpetmod.qp import solve_min_norm


def ldp(A):
    """Least-distance programming via NNLS: min ||x|| with A x >= 1."""
    m, n = A.shape
    E = np.vstack([A.T, np.ones((1, m))])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f)
    r = E @ u - f
    return -r[:n] / r[n]


@pytest.mark.parametrize("seed", range(12))
def test_matches_nnls_least_distance(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 9), rng.integers(2, 7)
    A = (rng.random((m, n)) < 0.5) * rng.integers(1, 3, size=(m, n))
    A[np.arange(m), rng.integers(0, n, size=m)] = 1  # no empty rows
    res = solve_min_norm(A.astype(float))
    x = ldp(A.astype(float))
    assert res.value == pytest.approx(float(x @ x), rel=1e-9, abs=1e-12)
    assert np.allclose(res.x, x, atol=1e-7)
    assert (A @ res.x).min() >= 1 - 1e-9


def test_value_equals_multiplier_sum():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    res = solve_min_norm(A)
    assert res.value == pytest.approx(res.lam.sum(), rel=1e-10)
    assert res.lower <= res.value + 1e-12 <= res.upper + 2e-12


def test_single_row_is_reciprocal_of_row_norm():
    res = solve_min_norm(np.ones((1, 4)))
    assert res.value == pytest.approx(0.25, abs=1e-14)


def test_empty_row_rejected():
    with pytest.raises(ValueError):
        solve_min_norm(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_negative_entries_rejected():
    with pytest.raises(ValueError):
        solve_min_norm(np.array([[1.0, -1.0]]))


def test_sweep_budget():
    rng = np.random.default_rng(3)
    A = (rng.random((40, 30)) < 0.3).astype(float) + np.eye(40, 30)
    with pytest.raises(IterationLimit) as err:
        solve_min_norm(A, tol_obj=1e-16, tol_feas=0.0, max_sweeps=8)
    assert err.value.report.sweeps == 8
