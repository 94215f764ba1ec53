import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from carpetmod.errors import BudgetExceeded, NoPath
from carpetmod.grid_modulus import (PathProblem, Tolerances, brute_force_modulus, decode_value,
                                    discrete_modulus, encode_value, minimal_rows,
                                    separation_oracle, simple_paths)


def chain(groups):
    """Source, the given nodes in a row, then the target."""
    n = len(groups) + 2
    edges = [(i, i + 1) for i in range(n - 1)]
    return PathProblem(n, edges, [()] + list(groups) + [()], {0}, {n - 1})


def grid_problem(w, h):
    idx = lambda i, j: j * w + i
    edges = [(idx(i, j), idx(i + 1, j)) for j in range(h) for i in range(w - 1)]
    edges += [(idx(i, j), idx(i, j + 1)) for j in range(h - 1) for i in range(w)]
    n = w * h
    s, t = n, n + 1
    edges += [(s, idx(0, j)) for j in range(h)] + [(idx(w - 1, j), t) for j in range(h)]
    groups = [(idx(i, j),) for j in range(h) for i in range(w)] + [(), ()]
    return PathProblem(n + 2, edges, groups, {s}, {t})


def modulus(problem, brute=False):
    """Value with the empty family counted as 0 and an unchargeable path as +inf."""
    try:
        rep = brute_force_modulus(problem) if brute else discrete_modulus(problem)
    except NoPath:
        return 0.0
    return rep.value


def test_single_path_is_reciprocal_of_length():
    assert modulus(chain([(0,), (1,), (2,), (3,)])) == pytest.approx(0.25, abs=1e-12)


def test_repeated_group_is_charged_once():
    assert modulus(chain([(0,), (1,), (0,)])) == pytest.approx(0.5, abs=1e-12)


def test_parallel_paths_add():
    # two disjoint routes, each meeting two private groups
    p = PathProblem(6, [(0, 1), (1, 2), (2, 5), (0, 3), (3, 4), (4, 5)],
                    [(), (0,), (1,), (2,), (3,), ()], {0}, {5})
    assert modulus(p) == pytest.approx(1.0, abs=1e-12)


def test_grid_strip_matches_width_over_length():
    # a 3x3 strip crossed left to right: three parallel rows of length three
    p = grid_problem(3, 3)
    assert modulus(p) == pytest.approx(1.0, abs=1e-9)
    assert modulus(p, brute=True) == pytest.approx(1.0, abs=1e-9)


def test_uncharged_path_is_infeasible():
    rep = discrete_modulus(PathProblem(3, [(0, 1), (1, 2)], [(), (), ()], {0}, {2}))
    assert rep.status == "infeasible" and math.isinf(rep.value)
    assert encode_value(rep.value) == "+inf" and math.isinf(decode_value("+inf"))


def test_disconnected_raises_no_path_with_report():
    p = PathProblem(4, [(0, 1), (2, 3)], [(), (0,), (1,), ()], {0}, {3})
    with pytest.raises(NoPath) as err:
        discrete_modulus(p)
    assert err.value.report.status == "no_path"


def test_problem_validation():
    with pytest.raises(ValueError):
        PathProblem(2, [(0, 1)], [(), ()], {0}, {0})
    with pytest.raises(ValueError):
        PathProblem(2, [(0, 0)], [(), ()], {0}, {1})
    with pytest.raises(ValueError):
        PathProblem(2, [(0, 1)], [()], {0}, {1})


def test_json_round_trip():
    p = grid_problem(2, 3)
    q = PathProblem.from_json(json.loads(json.dumps(p.to_json())))
    assert q.to_json() == p.to_json()


def test_oracle_returns_cheapest_path():
    p = PathProblem(5, [(0, 1), (1, 4), (0, 2), (2, 3), (3, 4)],
                    [(), (0,), (1,), (2,), ()], {0}, {4})
    path, length = separation_oracle(p, np.array([5.0, 1.0, 1.0]))
    assert path == (0, 2, 3, 4) and length == pytest.approx(2.0)


def test_simple_path_budget():
    with pytest.raises(BudgetExceeded):
        list(simple_paths(grid_problem(4, 4), 10))


def test_minimal_rows_drops_dominated():
    rows = minimal_rows([{0: 1, 1: 1}, {0: 1}, {0: 1}, {2: 1}])
    assert sorted(map(sorted, (r.items() for r in rows))) == [[(0, 1)], [(2, 1)]]


def test_warm_start_does_not_change_optimum():
    p = grid_problem(4, 3)
    base = discrete_modulus(p).value
    rng = np.random.default_rng(0)
    warm = discrete_modulus(p, start=rng.random(p.n_vars)).value
    assert warm == pytest.approx(base, abs=1e-9)


# ---------------------------------------------------------------------------
# Modulus axioms on random small problems


@st.composite
def problems(draw, extra_target=False):
    n = draw(st.integers(4, 8))
    n_groups = draw(st.integers(1, 4))
    groups = [()]
    for _ in range(n - 2):
        groups.append(tuple(draw(st.sets(st.integers(0, n_groups - 1), max_size=2))))
    groups.append(())
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=n - 1, max_size=2 * n, unique=True))
    # keep a spanning chain so the family is never empty
    order = draw(st.permutations(list(range(1, n - 1))))
    spine = [0] + list(order) + [n - 1]
    edges = sorted(set(chosen) | {tuple(sorted(e)) for e in zip(spine, spine[1:])})
    return PathProblem(n, edges, groups, {0}, {n - 1})


AXIOMS = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
EPS = 1e-9


@AXIOMS
@given(problems(), st.data())
def test_monotone_under_edge_removal(p, data):
    keep = data.draw(st.lists(st.booleans(), min_size=len(p.edges), max_size=len(p.edges)))
    sub = PathProblem(p.n_nodes, [e for e, k in zip(p.edges, keep) if k], p.groups,
                      p.sources, p.targets)
    big, small = modulus(p), modulus(sub)
    assert small <= big + EPS * max(1.0, big)
    assert modulus(p, brute=True) == pytest.approx(big, rel=1e-8, abs=1e-9)


@AXIOMS
@given(problems(), st.integers(1, 6))
def test_subadditive_over_target_split(p, k):
    second = 1 + (k % (p.n_nodes - 2))  # an interior node becomes a second target
    both = PathProblem(p.n_nodes, p.edges, p.groups, p.sources, {p.n_nodes - 1, second})
    one = PathProblem(p.n_nodes, p.edges, p.groups, p.sources, {p.n_nodes - 1})
    two = PathProblem(p.n_nodes, p.edges, p.groups, p.sources, {second})
    total = modulus(both)
    assert total <= modulus(one) + modulus(two) + EPS * max(1.0, total)


@AXIOMS
@given(problems(), st.sets(st.integers(0, 5), max_size=2))
def test_overflowing_family_has_smaller_modulus(p, extra):
    # every path to the new pendant target passes the old target first
    t = p.n_nodes - 1
    longer = PathProblem(p.n_nodes + 1, list(p.edges) + [(t, p.n_nodes)],
                         list(p.groups) + [tuple(extra)], p.sources, {p.n_nodes})
    short = modulus(p)
    assert modulus(longer) <= short + EPS * max(1.0, short)


def test_tolerances_round_trip():
    t = Tolerances(feas=1e-8)
    assert Tolerances(**t.to_dict()) == t
