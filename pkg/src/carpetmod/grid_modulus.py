"""Discrete modulus of path families on node-weighted graphs.

A :class:`PathProblem` is an undirected graph whose nodes carry weight-group
labels.  Its modulus is::

    min sum_v rho_v^2   s.t.   sum over variables v met by the path >= 1
                               for every source -> target path,  rho >= 0

Groups map onto variables (identity by default); a path meeting two distinct
groups with the same variable is charged that variable twice.  The solver
alternates a QP over the constraints found so far with a shortest-path
separation oracle (constraint generation).
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import BudgetExceeded, IterationLimit, NoPath
from .qp import MAX_SWEEPS, TOL_FEAS, TOL_OBJ, solve_min_norm

MAX_ROUNDS = 100_000


@dataclass(frozen=True)
class Tolerances:
    feas: float = TOL_FEAS
    obj: float = TOL_OBJ
    max_sweeps: int = MAX_SWEEPS
    max_rounds: int = MAX_ROUNDS
    paths_per_round: int = 64

    def to_dict(self) -> dict:
        return {"feas": self.feas, "obj": self.obj, "max_sweeps": self.max_sweeps,
                "max_rounds": self.max_rounds, "paths_per_round": self.paths_per_round}


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class PathProblem:
    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    groups: tuple[tuple[int, ...], ...]
    sources: frozenset[int]
    targets: frozenset[int]
    variables: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "groups", tuple(tuple(sorted(set(int(g) for g in gs)))
                                                 for gs in self.groups))
        object.__setattr__(self, "sources", frozenset(int(s) for s in self.sources))
        object.__setattr__(self, "targets", frozenset(int(t) for t in self.targets))
        if len(self.groups) != self.n_nodes:
            raise ValueError("need one group list per node")
        if not self.sources or not self.targets:
            raise ValueError("source and target sets must be nonempty")
        if self.sources & self.targets:
            raise ValueError("source and target sets must be disjoint")
        for u, v in self.edges:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
        if self.variables is not None:
            object.__setattr__(self, "variables", tuple(int(v) for v in self.variables))
            if len(self.variables) != self.n_groups:
                raise ValueError("variables must map every group")

    @property
    def n_groups(self) -> int:
        return 1 + max((g for gs in self.groups for g in gs), default=-1)

    @property
    def n_vars(self) -> int:
        if self.variables is None:
            return self.n_groups
        return 1 + max(self.variables, default=-1)

    def var_of(self, g: int) -> int:
        return g if self.variables is None else self.variables[g]

    def row(self, path: Sequence[int]) -> dict[int, int]:
        """Variable multiplicities of the distinct groups met by ``path``."""
        met = set()
        for v in path:
            met.update(self.groups[v])
        out: dict[int, int] = {}
        for g in met:
            var = self.var_of(g)
            out[var] = out.get(var, 0) + 1
        return out

    def length(self, path: Sequence[int], weights) -> float:
        return float(sum(c * weights[v] for v, c in self.row(path).items()))

    def run_length(self, path: Sequence[int], weights) -> float:
        """Length under the run-charging rule used by the oracle."""
        total = 0.0
        prev: tuple[int, ...] = ()
        for v in path:
            for g in self.groups[v]:
                if g not in prev:
                    total += weights[self.var_of(g)]
            prev = self.groups[v]
        return float(total)

    def to_json(self) -> dict:
        d = {"schema": "gm-problem/1", "n_nodes": self.n_nodes,
             "edges": [list(e) for e in self.edges],
             "groups": [list(g) for g in self.groups],
             "sources": sorted(self.sources), "targets": sorted(self.targets)}
        if self.variables is not None:
            d["variables"] = list(self.variables)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "PathProblem":
        return cls(d["n_nodes"], tuple(map(tuple, d["edges"])), tuple(map(tuple, d["groups"])),
                   frozenset(d["sources"]), frozenset(d["targets"]), d.get("variables"))

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(set(a)) for a in adj]


@dataclass
class ModulusReport:
    value: float
    weights: np.ndarray
    status: str = "ok"  # ok | infeasible | no_path
    active: list[tuple[int, ...]] = field(default_factory=list)
    iterations: int = 0
    max_violation: float = 0.0
    lower: float = 0.0
    upper: float = 0.0
    n_constraints: int = 0
    wall_time: float = 0.0
    method: str = "constraint-generation"

    @property
    def finite(self) -> bool:
        return self.status == "ok"

    @property
    def mass(self) -> float:
        return float(np.dot(self.weights, self.weights))

    def to_json(self) -> dict:
        return {
            "schema": "gm-report/1",
            "status": self.status,
            "value": encode_value(self.value),
            "weights": [float(w) for w in self.weights],
            "active_paths": [list(p) for p in self.active],
            "diagnostics": {
                "method": self.method,
                "iterations": self.iterations,
                "constraints": self.n_constraints,
                "max_violation": self.max_violation,
                "lower": encode_value(self.lower),
                "upper": encode_value(self.upper),
            },
        }


def encode_value(v: float):
    """JSON form of a modulus value; the unbounded sentinel is a string."""
    if math.isinf(v):
        return "+inf"
    return float(v)


def decode_value(v) -> float:
    return math.inf if v == "+inf" else float(v)


class _Compiled:
    """Static arrays for the oracle: directed edges plus a super-source."""

    def __init__(self, problem: PathProblem):
        self.problem = problem
        n = problem.n_nodes
        nv = problem.n_vars
        adj = problem.adjacency()
        src = sorted(problem.sources)
        self.super = n
        rows, cols = [], []
        charge_rows, charge_cols, charge_vals = [], [], []

        def charge(k, entered, previous):
            counts: dict[int, int] = {}
            for g in entered:
                if g not in previous:
                    var = problem.var_of(g)
                    counts[var] = counts.get(var, 0) + 1
            for var, c in sorted(counts.items()):
                charge_rows.append(k)
                charge_cols.append(var)
                charge_vals.append(c)

        # CSR over n + 1 nodes; row order fixes the structure used by dijkstra
        for u in range(n):
            for v in adj[u]:
                if v in problem.sources:
                    continue  # re-entering a source never shortens a path
                charge(len(rows), problem.groups[v], problem.groups[u])
                rows.append(u)
                cols.append(v)
        for s in src:
            charge(len(rows), problem.groups[s], ())
            rows.append(n)
            cols.append(s)
        rows_a = np.asarray(rows, dtype=np.int64)
        cols_a = np.asarray(cols, dtype=np.int64)
        order = np.lexsort((cols_a, rows_a))
        self.rows, self.cols = rows_a[order], cols_a[order]
        inv = np.empty_like(order)
        inv[order] = np.arange(order.size)
        self.charge = sp.csr_matrix(
            (np.asarray(charge_vals, dtype=float),
             (inv[np.asarray(charge_rows, dtype=np.int64)], np.asarray(charge_cols, dtype=np.int64))),
            shape=(order.size, nv))
        self.indptr = np.searchsorted(self.rows, np.arange(n + 2)).astype(np.int32)
        self.indices = self.cols.astype(np.int32)
        self.targets = np.array(sorted(problem.targets), dtype=np.int64)

    def graph(self, weights: np.ndarray) -> sp.csr_matrix:
        data = np.asarray(self.charge @ weights, dtype=float)
        g = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.super + 1,) * 2)
        return g

    def shortest(self, weights: np.ndarray):
        dist, pred = dijkstra(self.graph(weights), directed=True, indices=self.super,
                              return_predecessors=True)
        return dist, pred

    def path_to(self, pred: np.ndarray, t: int) -> tuple[int, ...]:
        out = []
        v = int(t)
        while v != self.super:
            out.append(v)
            v = int(pred[v])
            if v < 0:
                raise NoPath("broken predecessor chain")
        return tuple(reversed(out))


def separation_oracle(problem: PathProblem, weights, compiled: _Compiled | None = None):
    """Cheapest source->target path under run charging, and its length.

    Ties between targets go to the smallest node id.
    """
    c = compiled or _Compiled(problem)
    w = np.asarray(weights, dtype=float)
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    dist, pred = c.shortest(w)
    dt = dist[c.targets]
    if not np.isfinite(dt).any():
        raise NoPath("targets unreachable from sources")
    t = c.targets[int(np.argmin(dt))]
    return c.path_to(pred, t), float(dist[t])


def _candidate_paths(c: _Compiled, weights: np.ndarray, limit: float, k: int):
    dist, pred = c.shortest(weights)
    dt = dist[c.targets]
    if not np.isfinite(dt).any():
        raise NoPath("targets unreachable from sources")
    order = np.argsort(dt, kind="stable")
    out = []
    for idx in order[:max(k, 1)]:
        if not dt[idx] < limit and out:
            break
        out.append((c.path_to(pred, c.targets[idx]), float(dt[idx])))
    return out


def _row_key(row: dict[int, int]) -> tuple:
    return tuple(sorted(row.items()))


def _matrix(rows: list[dict[int, int]], nv: int) -> sp.csr_matrix:
    r, c, v = [], [], []
    for i, row in enumerate(rows):
        for var, cnt in sorted(row.items()):
            r.append(i)
            c.append(var)
            v.append(float(cnt))
    return sp.csr_matrix((v, (r, c)), shape=(len(rows), nv))


def _infeasible(problem: PathProblem, path, t0, method, iterations=0) -> ModulusReport:
    return ModulusReport(math.inf, np.zeros(problem.n_vars), status="infeasible",
                         active=[tuple(path)], iterations=iterations, lower=math.inf,
                         upper=math.inf, wall_time=time.perf_counter() - t0, method=method)


def _no_path(problem: PathProblem, t0, method) -> NoPath:
    rep = ModulusReport(math.inf, np.zeros(problem.n_vars), status="no_path",
                        lower=math.inf, upper=math.inf,
                        wall_time=time.perf_counter() - t0, method=method)
    return NoPath("no source-target path exists", report=rep)


def _finish(problem, rows, paths, res, tol, iterations, t0, method) -> ModulusReport:
    A = _matrix(rows, problem.n_vars)
    slack = A @ res.x - 1.0
    active = [paths[i] for i in np.flatnonzero(np.abs(slack) <= max(tol.feas, 1e-9))]
    return ModulusReport(
        value=float(res.value), weights=res.x, active=active, iterations=iterations,
        max_violation=res.violation, lower=res.lower, upper=res.upper,
        n_constraints=len(rows), wall_time=time.perf_counter() - t0, method=method)


def discrete_modulus(problem: PathProblem, tol: Tolerances = DEFAULT_TOL,
                     start=None) -> ModulusReport:
    """Modulus by constraint generation.

    ``start`` is an optional warm start: a weight vector whose cheapest paths
    seed the constraint pool.  The optimum does not depend on it.
    Raises :class:`NoPath` if no path joins the source and target sets.  A
    path meeting no weight group makes the family inadmissible for every
    weighting; that case is reported with ``status == "infeasible"`` and an
    infinite value.
    """
    t0 = time.perf_counter()
    method = "constraint-generation"
    c = _Compiled(problem)
    nv = problem.n_vars
    try:
        path, _ = separation_oracle(problem, np.ones(nv), compiled=c)
    except NoPath:
        raise _no_path(problem, t0, method) from None
    if not problem.row(path):
        return _infeasible(problem, path, t0, method)

    rows: list[dict[int, int]] = []
    paths: list[tuple[int, ...]] = []
    seen: set[tuple] = set()
    lam = np.zeros(0)
    if start is not None:
        w0 = np.asarray(start, dtype=float)
        if w0.shape != (nv,) or (w0 < 0).any():
            raise ValueError("warm start must be a nonnegative weight per variable")
        for p, _ in _candidate_paths(c, w0, math.inf, tol.paths_per_round):
            row = problem.row(p)
            key = _row_key(row)
            if row and key not in seen:
                seen.add(key)
                rows.append(row)
                paths.append(p)
        lam = np.zeros(len(rows))
    x = np.zeros(nv)
    res = None
    if rows:
        res = solve_min_norm(_matrix(rows, nv), lam, tol.obj, tol.feas, tol.max_sweeps)
        x, lam = res.x, res.lam

    for it in range(1, tol.max_rounds + 1):
        cands = _candidate_paths(c, x, 1.0 - tol.feas, tol.paths_per_round)
        added = 0
        for p, run_len in cands:
            if run_len >= 1.0 - tol.feas:
                continue
            row = problem.row(p)
            if not row:
                return _infeasible(problem, p, t0, method, it)
            key = _row_key(row)
            if key in seen:
                continue
            if sum(cnt * x[v] for v, cnt in row.items()) >= 1.0 - tol.feas:
                continue
            seen.add(key)
            rows.append(row)
            paths.append(p)
            added += 1
        if not added:
            if res is None:  # every path already long enough at rho = 0: impossible
                raise AssertionError("oracle returned no violated path at zero weights")
            return _finish(problem, rows, paths, res, tol, it, t0, method)
        lam = np.concatenate([lam, np.zeros(len(rows) - lam.size)])
        res = solve_min_norm(_matrix(rows, nv), lam, tol.obj, tol.feas, tol.max_sweeps)
        x, lam = res.x, res.lam
    rep = _finish(problem, rows, paths, res, tol, tol.max_rounds, t0, method)
    raise IterationLimit(f"no convergence in {tol.max_rounds} oracle rounds", report=rep)


def simple_paths(problem: PathProblem, budget: int) -> Iterable[tuple[int, ...]]:
    """All simple paths from a source to the first target they reach.

    Paths through a second source or past a target are skipped: each has a
    sub-path meeting a subset of its groups, so its constraint is implied.
    """
    adj = problem.adjacency()
    count = 0
    for s in sorted(problem.sources):
        stack = [(s, iter(adj[s]))]
        on_path = {s}
        path = [s]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_path.discard(path.pop())
                continue
            if nxt in on_path or nxt in problem.sources:
                continue
            if nxt in problem.targets:
                count += 1
                if count > budget:
                    raise BudgetExceeded(f"more than {budget} simple paths", count=count)
                yield tuple(path) + (nxt,)
                continue
            on_path.add(nxt)
            path.append(nxt)
            stack.append((nxt, iter(adj[nxt])))


def minimal_rows(rows: Iterable[dict[int, int]]) -> list[dict[int, int]]:
    """Drop duplicate rows and rows that dominate (entrywise >=) another."""
    uniq = {_row_key(r): r for r in rows}
    keys = sorted(uniq, key=lambda k: (sum(c for _, c in k), k))
    kept: list[tuple] = []
    for k in keys:
        d = dict(k)
        if any(all(d.get(v, 0) >= c for v, c in kk) for kk in kept):
            continue
        kept.append(k)
    return [dict(k) for k in kept]


def brute_force_modulus(problem: PathProblem, path_budget: int = 200_000,
                        tol: Tolerances = DEFAULT_TOL) -> ModulusReport:
    """Modulus from the full constraint set of all simple paths."""
    t0 = time.perf_counter()
    method = "brute-force"
    rows_by_key: dict[tuple, dict[int, int]] = {}
    path_by_key: dict[tuple, tuple[int, ...]] = {}
    n_paths = 0
    for p in simple_paths(problem, path_budget):
        n_paths += 1
        row = problem.row(p)
        if not row:
            return _infeasible(problem, p, t0, method)
        key = _row_key(row)
        if key not in rows_by_key:
            rows_by_key[key] = row
            path_by_key[key] = p
    if n_paths == 0:
        raise _no_path(problem, t0, method)
    rows = minimal_rows(rows_by_key.values())
    paths = [path_by_key[_row_key(r)] for r in rows]
    res = solve_min_norm(_matrix(rows, problem.n_vars), None, tol.obj, tol.feas, tol.max_sweeps)
    rep = _finish(problem, rows, paths, res, tol, 1, t0, method)
    return rep


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
