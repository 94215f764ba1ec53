"""Minimum-norm point of ``{x : A x >= 1}`` for a nonnegative matrix ``A``.

Problem::

    minimize ||x||^2   subject to   A x >= 1

With ``A >= 0`` entrywise the optimum automatically has ``x = A^T lam >= 0``
for the dual multipliers ``lam >= 0``, so the sign constraint on ``x`` never
binds.  The dual ``max 1.lam - ||A^T lam||^2 / 2`` is solved by cyclic
coordinate ascent (Hildreth's method) and finished by an exact solve on the
detected active set.  At the optimum ``||x||^2 = sum(lam)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import IterationLimit

TOL_FEAS = 1e-9
TOL_OBJ = 1e-10
MAX_SWEEPS = 1_000_000


@njit(cache=True)
def _sweeps(indptr, indices, data, norms, lam, x, n_sweeps):
    m = indptr.size - 1
    for _ in range(n_sweeps):
        for i in range(m):
            dot = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                dot += data[p] * x[indices[p]]
            new = lam[i] + (1.0 - dot) / norms[i]
            if new < 0.0:
                new = 0.0
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                for p in range(indptr[i], indptr[i + 1]):
                    x[indices[p]] += d * data[p]


@dataclass
class QPResult:
    x: np.ndarray
    lam: np.ndarray
    value: float
    lower: float
    upper: float
    sweeps: int
    violation: float
    polished: bool


def _bounds(A, lam, x):
    sq = float(x @ x)
    lower = 2.0 * float(lam.sum()) - sq
    ax = A @ x
    worst = float(ax.min()) if ax.size else 1.0
    upper = sq / worst ** 2 if worst > 0 else np.inf
    return lower, upper, max(0.0, 1.0 - worst)


def _polish(A, lam):
    """Exact KKT solve on the support of ``lam``; None if it is not optimal."""
    S = np.flatnonzero(lam > 0)
    if S.size == 0:
        return None
    AS = A[S]
    if sp.issparse(AS):
        AS = AS.toarray()
    M = AS @ AS.T
    mu, *_ = np.linalg.lstsq(M, np.ones(S.size), rcond=None)
    if mu.min() < -1e-12:
        return None
    mu = np.maximum(mu, 0.0)
    x = AS.T @ mu
    ax = A @ x
    if ax.min() < 1.0 - 1e-12:
        return None
    out = np.zeros_like(lam)
    out[S] = mu
    return out, x


def solve_min_norm(A, lam0=None, tol_obj: float = TOL_OBJ, tol_feas: float = TOL_FEAS,
                   max_sweeps: int = MAX_SWEEPS) -> QPResult:
    """Solve the dual by coordinate ascent; ``lam0`` warm-starts it.

    Raises :class:`IterationLimit` (with the best bounds) if ``max_sweeps``
    coordinate sweeps do not close the duality gap.
    """
    A = sp.csr_matrix(A, dtype=float)
    m, n = A.shape
    if m == 0:
        return QPResult(np.zeros(n), np.zeros(0), 0.0, 0.0, 0.0, 0, 0.0, True)
    if (A.data < 0).any():
        raise ValueError("constraint matrix must be nonnegative")
    norms = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    if (norms == 0).any():
        raise ValueError("a constraint row is empty; the problem is infeasible")
    lam = np.zeros(m) if lam0 is None else np.maximum(np.asarray(lam0, dtype=float), 0.0)
    x = A.T @ lam
    indptr, indices, data = A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data
    sweeps, chunk = 0, 8
    while True:
        _sweeps(indptr, indices, data, norms, lam, x, chunk)
        sweeps += chunk
        # recompute to shed accumulated rounding
        x = A.T @ lam
        lower, upper, viol = _bounds(A, lam, x)
        if upper - lower <= 1e-6 * max(1.0, upper):
            pol = _polish(A, lam)
            if pol is not None:
                plam, px = pol
                pl, pu, pv = _bounds(A, plam, px)
                if pu - pl <= tol_obj * max(1.0, pu) and pv <= tol_feas:
                    return QPResult(px, plam, float(px @ px), pl, pu, sweeps, pv, True)
        if upper - lower <= tol_obj * max(1.0, upper) and viol <= tol_feas:
            return QPResult(x, lam, float(x @ x), lower, upper, sweeps, viol, False)
        if sweeps >= max_sweeps:
            res = QPResult(x, lam, float(x @ x), lower, upper, sweeps, viol, False)
            raise IterationLimit(
                f"coordinate ascent stopped after {sweeps} sweeps with gap {upper - lower:.3e}",
                report=res)
        chunk = min(chunk * 2, 4096, max_sweeps - sweeps)
