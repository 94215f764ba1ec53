from fractions import Fraction as Fr
from itertools import combinations

import numpy as np
import pytest

from carpetmod.carpet import (Adjacency, CarpetSpec, CellGrid, CopyBoundary, catalog_size,
                              circle_catalog, circle_distance_sq, classify_pair, generate,
                              subcarpet_map)
from carpetmod.errors import BudgetExceeded, ConstraintViolation, InvalidPair, NotAHole

F51 = CarpetSpec.fnp(5, 1)


@pytest.mark.parametrize("spec,keep", [(F51, 21), (CarpetSpec.fnp(7, 2), 45),
                                       (CarpetSpec.fnpr(7, 1, 2), 33), (CarpetSpec.sm(3), 8),
                                       (CarpetSpec.sm(5), 24)])
def test_occupied_counts(spec, keep):
    for k in (1, 2):
        assert generate(spec, k).count == keep ** k
    assert spec.keep_count == keep


def test_catalog_sizes():
    assert [len(circle_catalog(F51, k)) for k in (0, 1, 2, 3)] == [1, 5, 89, 1853]
    assert len(circle_catalog(CarpetSpec.sm(3), 3)) == 1 + 1 + 8 + 64
    for spec in (F51, CarpetSpec.fnpr(7, 1, 2), CarpetSpec.sm(5)):
        for k in (1, 2):
            assert len(circle_catalog(spec, k)) == catalog_size(spec, k)


def test_generation_one_layout():
    cat = circle_catalog(F51, 1)
    assert [cat.name(c.id) for c in cat] == ["O", "M1", "M2", "M4", "M3"]
    m1, m3 = cat[cat.resolve("M1")], cat[cat.resolve("M3")]
    assert m1.anchor == (Fr(1, 5), Fr(1, 5)) and m1.side == Fr(1, 5)
    assert m3.anchor == (Fr(3, 5), Fr(3, 5))
    assert cat.inner_circles() == [1, 2, 4, 3]


def test_generalized_holes():
    cat = circle_catalog(CarpetSpec.fnpr(7, 1, 2), 1)
    assert {c.anchor for c in cat.holes()} == {(Fr(1, 7), Fr(1, 7)), (Fr(4, 7), Fr(1, 7)),
                                              (Fr(4, 7), Fr(4, 7)), (Fr(1, 7), Fr(4, 7))}
    assert all(c.side == Fr(2, 7) for c in cat.holes())


def test_mask_matches_catalog():
    grid = generate(F51, 2)
    cat = circle_catalog(F51, 2)
    removed = np.zeros_like(grid.occupied)
    for c in cat.holes():
        s = 5 ** (2 - c.generation)
        removed[c.cell[0] * s:(c.cell[0] + 1) * s, c.cell[1] * s:(c.cell[1] + 1) * s] = True
    assert np.array_equal(removed, ~grid.occupied)


@pytest.mark.parametrize("bad", [lambda: CarpetSpec.fnp(5, 2), lambda: CarpetSpec.fnp(4, 1),
                                 lambda: CarpetSpec.fnp(6, 0), lambda: CarpetSpec.sm(4),
                                 lambda: CarpetSpec.sm(1), lambda: CarpetSpec.fnpr(7, 2, 2)])
def test_invalid_parameters(bad):
    with pytest.raises(ConstraintViolation):
        bad()


def test_grid_json_round_trip():
    g = generate(CarpetSpec.sm(3), 2)
    assert CellGrid.from_json(g.to_json()) == g


def test_budget():
    with pytest.raises(BudgetExceeded):
        generate(F51, 8)


def test_holes_uniformly_separated():
    cat = circle_catalog(F51, 2)
    for a, b in combinations(cat.holes(), 2):
        assert circle_distance_sq(a, b) >= min(a.side, b.side) ** 2


def test_adjacency():
    cat = circle_catalog(F51, 2)
    assert classify_pair(cat, 1, 2) is Adjacency.ADJACENT
    assert classify_pair(cat, 0, 1) is Adjacency.NONADJACENT
    same_parent = [c.id for c in cat.holes(2) if c.parent == (0, 0)]
    assert len(same_parent) == 4
    assert classify_pair(cat, *same_parent[:2]) is Adjacency.ADJACENT
    other = next(c.id for c in cat.holes(2) if c.parent == (1, 0))
    assert classify_pair(cat, same_parent[0], other) is Adjacency.NONADJACENT
    with pytest.raises(InvalidPair):
        classify_pair(cat, 3, 3)


def test_sm_has_no_adjacent_pairs():
    cat = circle_catalog(CarpetSpec.sm(3), 2)
    assert all(classify_pair(cat, a.id, b.id) is Adjacency.NONADJACENT
               for a, b in combinations(cat, 2))


def test_subcarpet_map():
    cat = circle_catalog(F51, 2)
    with pytest.raises(NotAHole):
        subcarpet_map(cat, 0)
    assert subcarpet_map(cat, 1).outer == 0
    hole = next(c for c in cat.holes(2) if c.parent == (2, 1))
    cp = subcarpet_map(cat, hole.id)
    assert cp.outer == CopyBoundary(1, (2, 1))
    assert cp.scale == Fr(1, 5)
    corr = cp.correspondence(cat)
    assert corr[0] == cp.outer
    assert corr[circle_catalog(F51, 1).inner_circles()[hole.slot]] == hole.id
    x, y = cp.map_point(*circle_catalog(F51, 1)[1].anchor)
    assert (x, y) == cat[corr[1]].anchor


def test_resolve_names():
    cat = circle_catalog(CarpetSpec.sm(3), 2)
    assert cat.resolve("O") == 0 and cat.resolve("M") == 1 and cat.resolve("C5") == 5
    with pytest.raises(KeyError):
        cat.resolve("M7")


def test_dimension():
    assert F51.dimension == pytest.approx(np.log(21) / np.log(5))
    assert CarpetSpec.fnp(7, 1).dimension == pytest.approx(np.log(45) / np.log(7))
