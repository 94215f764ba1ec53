import pytest

from carpetmod.carpet import CarpetSpec, CopyBoundary, circle_catalog, generate
from carpetmod.symmetry import (IDENTITY, R_D, R_V, apply_symmetry, dihedral_group, element,
                                map_boundary, map_cell, orbits)

SPECS = [CarpetSpec.fnp(5, 1), CarpetSpec.fnp(6, 1), CarpetSpec.fnpr(7, 1, 2), CarpetSpec.sm(3)]


def test_group_order_and_closure():
    G = dihedral_group()
    assert len(G) == 8 and G[0] == IDENTITY
    names = {g.name for g in G}
    for a in G:
        assert a.inverse().compose(a) == IDENTITY
        for b in G:
            assert a.compose(b).name in names
    assert R_D.compose(R_D) == IDENTITY
    assert element("rot90").compose(element("rot90")) == element("rot180")


@pytest.mark.parametrize("spec", SPECS)
def test_grids_invariant(spec):
    g = generate(spec, 2)
    for el in dihedral_group():
        assert apply_symmetry(el, g) == g


def test_map_cell_matches_affine_map():
    N = 25
    for el in dihedral_group():
        for i, j in [(0, 0), (3, 7), (24, 1)]:
            x, y = el((2 * i + 1) / (2 * N), (2 * j + 1) / (2 * N))
            assert map_cell(el, i, j, N) == (int(x * N), int(y * N))


def test_circle_orbits():
    cat = circle_catalog(CarpetSpec.fnp(5, 1), 2)
    orb = orbits(cat, [R_D, R_V])
    assert [0] in orb and [1, 2, 3, 4] in orb
    assert len(orb) == 14
    assert sorted(c for o in orb for c in o) == list(range(len(cat)))
    assert len(orbits(cat, [])) == len(cat)


def test_circle_ids_map_to_circles():
    cat = circle_catalog(CarpetSpec.fnp(5, 1), 1)
    assert apply_symmetry(R_V, 1, cat) == 2  # lower left <-> lower right
    assert apply_symmetry(R_D, 2, cat) == 3  # lower right <-> upper left
    assert apply_symmetry(R_D, 0, cat) == 0
    with pytest.raises(ValueError):
        apply_symmetry(R_V, 1)


def test_boundary_map():
    b = CopyBoundary(1, (1, 0))
    assert map_boundary(R_V, b, 5) == CopyBoundary(1, (3, 0))
    assert map_boundary(R_D, b, 5) == CopyBoundary(1, (0, 1))
