"""The isometry group of the unit square acting on grids and circles.

Elements are exact affine maps ``(x, y) -> A (x, y) + t`` with ``A`` a signed
permutation matrix and ``t`` in {0, 1}^2.  The group is produced by closing
the two generating reflections; the actions on cell indices and circle ids
are computed from the affine map.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .carpet import CellGrid, CircleCatalog, PeripheralCircle, CopyBoundary


@dataclass(frozen=True)
class SymmetryElement:
    name: str
    matrix: tuple[tuple[int, int], tuple[int, int]]
    shift: tuple[int, int]

    def __call__(self, x, y):
        (a, b), (c, d) = self.matrix
        return (a * x + b * y + self.shift[0], c * x + d * y + self.shift[1])

    def compose(self, other: "SymmetryElement") -> "SymmetryElement":
        """``self o other`` (apply ``other`` first)."""
        (a, b), (c, d) = self.matrix
        (e, f), (g, h) = other.matrix
        m = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        sx, sy = self(*other.shift)
        return _named(m, (sx, sy))

    __mul__ = compose

    def inverse(self) -> "SymmetryElement":
        for g in dihedral_group():
            if g.compose(self).name == "e":
                return g
        raise AssertionError("group is not closed")

    def square(self, x0: Fraction, y0: Fraction, side: Fraction) -> tuple[Fraction, Fraction]:
        """Lower-left corner of the image of an axis-parallel square."""
        corners = [self(x0 + dx, y0 + dy) for dx in (0, side) for dy in (0, side)]
        return (min(c[0] for c in corners), min(c[1] for c in corners))


_NAMES = {
    ((1, 0), (0, 1)): "e",
    ((0, -1), (1, 0)): "rot90",
    ((-1, 0), (0, -1)): "rot180",
    ((0, 1), (-1, 0)): "rot270",
    ((-1, 0), (0, 1)): "R_V",
    ((1, 0), (0, -1)): "R_H",
    ((0, 1), (1, 0)): "R_D",
    ((0, -1), (-1, 0)): "R_A",
}


def _named(matrix, shift) -> SymmetryElement:
    matrix = tuple(tuple(int(v) for v in row) for row in matrix)
    # the unit square is preserved, so the shift is determined by the matrix
    (a, b), (c, d) = matrix
    want = (int(a < 0) + int(b < 0), int(c < 0) + int(d < 0))
    if tuple(shift) != want:
        raise ValueError(f"affine map {matrix}+{shift} does not preserve the unit square")
    return SymmetryElement(_NAMES[matrix], matrix, want)


R_D = _named(((0, 1), (1, 0)), (0, 0))
R_V = _named(((-1, 0), (0, 1)), (1, 0))
IDENTITY = _named(((1, 0), (0, 1)), (0, 0))


@lru_cache(maxsize=None)
def dihedral_group() -> tuple[SymmetryElement, ...]:
    """All elements generated by ``R_D`` and ``R_V``, identity first."""
    return generate_group([R_D, R_V])


def generate_group(generators: Iterable[SymmetryElement]) -> tuple[SymmetryElement, ...]:
    gens = list(generators)
    seen = {IDENTITY.name: IDENTITY}
    frontier = [IDENTITY]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                x = g.compose(h)
                if x.name not in seen:
                    seen[x.name] = x
                    nxt.append(x)
        frontier = nxt
    order = list(_NAMES.values())
    return tuple(sorted(seen.values(), key=lambda g: order.index(g.name)))


def element(name: str) -> SymmetryElement:
    for g in dihedral_group():
        if g.name == name:
            return g
    raise KeyError(name)


def map_cell(g: SymmetryElement, i: int, j: int, side: int) -> tuple[int, int]:
    # doubled centre coordinates (2i+1, 2j+1) / (2 side); the shift scales by 2 side
    (a, b), (c, d) = g.matrix
    X, Y = 2 * i + 1, 2 * j + 1
    x = a * X + b * Y + 2 * side * g.shift[0]
    y = c * X + d * Y + 2 * side * g.shift[1]
    return ((x - 1) // 2, (y - 1) // 2)


def map_grid(g: SymmetryElement, grid: CellGrid) -> CellGrid:
    N = grid.side
    I, J = np.indices((N, N))
    I2, J2 = map_cell(g, I, J, N)
    out = np.empty_like(grid.occupied)
    out[I2, J2] = grid.occupied[I, J]
    out.setflags(write=False)
    return CellGrid(grid.spec, grid.level, out)


def map_circle(g: SymmetryElement, circle: PeripheralCircle, catalog: CircleCatalog) -> PeripheralCircle:
    if circle.is_outer:
        return circle
    x, y = g.square(circle.anchor[0], circle.anchor[1], circle.side)
    N = catalog.spec.base ** circle.generation
    cell = (int(x * N), int(y * N))
    cid = catalog.lookup(circle.generation, cell)
    if cid is None:
        raise KeyError(f"image of circle {circle.id} under {g.name} is not in the catalog")
    return catalog[cid]


def map_boundary(g: SymmetryElement, b: CopyBoundary, base: int) -> CopyBoundary:
    return CopyBoundary(b.level, map_cell(g, b.cell[0], b.cell[1], base ** b.level))


def apply_symmetry(g: SymmetryElement, x, catalog: CircleCatalog | None = None):
    """Apply ``g`` to a grid, a circle, or a circle id (ids need ``catalog``)."""
    if isinstance(x, CellGrid):
        return map_grid(g, x)
    if isinstance(x, PeripheralCircle):
        if catalog is None:
            raise ValueError("mapping a circle needs its catalog")
        return map_circle(g, x, catalog)
    if isinstance(x, (int, np.integer)):
        if catalog is None:
            raise ValueError("mapping a circle id needs its catalog")
        return map_circle(g, catalog[int(x)], catalog).id
    raise TypeError(f"cannot apply a symmetry to {type(x).__name__}")


@lru_cache(maxsize=64)
def circle_permutation(g: SymmetryElement, catalog: CircleCatalog) -> tuple[int, ...]:
    return tuple(map_circle(g, c, catalog).id for c in catalog)


def orbits(catalog: CircleCatalog, generators: Iterable[SymmetryElement]) -> list[list[int]]:
    """Orbit partition of the catalog under the subgroup spanned by ``generators``.

    Orbits are listed by smallest member and each is sorted.
    """
    group = generate_group(list(generators))
    perms = [circle_permutation(g, catalog) for g in group]
    parent = list(range(len(catalog)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for perm in perms:
        for a, b in enumerate(perm):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for a in range(len(catalog)):
        groups.setdefault(find(a), []).append(a)
    return [groups[r] for r in sorted(groups)]
