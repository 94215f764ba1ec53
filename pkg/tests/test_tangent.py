import math
from fractions import Fraction

import pytest

from carpetmod.carpet import CarpetSpec, circle_catalog
from carpetmod.errors import BudgetExceeded, UnmappedCircle
from carpetmod.tangent import (TangentHole, WindowKind, admissibility_sample, annulus_holes,
                               axis_hugging, build_window, projection_mass, quadrants_disjoint,
                               reflect_to_first, sample_paths, staircase, theta,
                               third_transfer, touched_holes)

F51 = CarpetSpec.fnp(5, 1)


def _theta_oracle(h):
    x, y, s = (float(v) for v in (h.x, h.y, h.side))
    return math.atan((y + s) / x) - math.atan(y / (x + s))


@pytest.mark.parametrize("d, count", [(1, 4), (2, 84), (3, 1764)])
def test_annulus_counts(d, count):
    holes = annulus_holes(F51, d)
    assert len(holes) == count
    assert all(max(h.x + h.side, h.y + h.side) > 1 for h in holes)


def test_window_sizes():
    assert len(build_window(F51, 1, 1).holes) == 8
    # with no scaled copies the origin window is just the level-d catalog
    assert len(build_window(F51, 0, 2).holes) == len(circle_catalog(F51, 2)) - 1
    corner = build_window(F51, 0, 1, WindowKind.CORNER)
    assert len(corner.holes) == 12
    assert quadrants_disjoint(corner) and quadrants_disjoint(build_window(F51, 2, 1))


def test_window_budget():
    with pytest.raises(BudgetExceeded):
        build_window(F51, 3, 3, max_holes=100)


def test_theta_matches_closed_form():
    for h in annulus_holes(F51, 3):
        assert abs(theta(h) - _theta_oracle(h)) <= 1e-12


def test_projection_mass_below_bound():
    for d in (1, 2, 3):
        rep = projection_mass(build_window(F51, 0, d))
        assert rep.mass <= rep.bound
        assert rep.to_json()["n_circles"] == len(rep.holes)


def test_touched_holes_corner_rule():
    # level-1 cell (0,0) meets hole (1,1) only at a corner
    assert touched_holes(F51, 1, 0, 0, corner_touch=True) == [(1, 1, 2, 2)]
    assert touched_holes(F51, 1, 0, 0, corner_touch=False) == []
    assert touched_holes(F51, 1, 1, 1) == [(1, 1, 2, 2)]


def test_paths_are_four_connected_and_span_quadrant():
    N = 25
    for cells in (staircase(N, Fraction(37, 3)), axis_hugging(N, 10)):
        for (a, b), (c, d) in zip(cells, cells[1:]):
            assert abs(a - c) + abs(b - d) == 1
        ends = {cells[0], cells[-1]}
        assert any(i == 0 for i, _ in ends) and any(j == 0 for _, j in ends)


def test_sample_paths_seeded():
    a = sample_paths(F51, 2, seed=7)
    assert a == sample_paths(F51, 2, seed=7)
    assert a != sample_paths(F51, 2, seed=8)


def test_sampled_admissibility_depth_five():
    rep = admissibility_sample(build_window(F51, 0, 1), depth=5)
    assert not rep.violated, (rep.worst, rep.minimum)


def test_shallow_samples_fall_short():
    # deep holes are absent at depth 2, so the arcs see too little weight
    rep = admissibility_sample(build_window(F51, 0, 2))
    assert rep.violated


def test_reflect_to_first():
    h = TangentHole(Fraction(-3), Fraction(1), Fraction(1))
    g = reflect_to_first(h)
    assert (g.x, g.y, g.side) == (2, 1, 1)
    with pytest.raises(UnmappedCircle):
        reflect_to_first(TangentHole(Fraction(-1, 2), Fraction(1), Fraction(1)))


def test_third_transfer_exact():
    rep = third_transfer(build_window(F51, 0, 2), build_window(F51, 0, 2, "corner"))
    assert rep.exact
    assert rep.mass_tilde * 3 == rep.mass
    assert len(rep.rho_tilde) == 3 * len(rep.rho)
    assert rep.corner_sums
