"""Exact construction of square carpets and their peripheral circles.

Three families are supported:

* ``Fnp``  -- subdivide into n x n, remove four corner-offset subsquares.
* ``Fnpr`` -- as ``Fnp`` but the removed squares have side r/n.
* ``Sm``   -- the standard carpet, remove the middle square of an m x m split.

Cells are indexed ``(i, j)`` = (column, row) from the lower-left corner, so
cell ``(i, j)`` at level k is ``[i/N, (i+1)/N] x [j/N, (j+1)/N]`` with
``N = base**k``.  All geometry is kept in :class:`fractions.Fraction`.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, ConstraintViolation, InvalidPair, NotAHole

DEFAULT_MAX_CELLS = 4_000_000
DEFAULT_MAX_CIRCLES = 200_000


class Family(str, enum.Enum):
    FNP = "fnp"
    FNPR = "fnpr"
    SM = "sm"


@dataclass(frozen=True)
class CarpetSpec:
    family: Family
    n: int = 0
    p: int = 0
    r: int = 1
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.FNP and self.r != 1:
            raise ConstraintViolation("Fnp carpets have r = 1; use Fnpr for larger holes")

    @classmethod
    def fnp(cls, n: int, p: int) -> "CarpetSpec":
        return validate_spec(cls(Family.FNP, n=n, p=p))

    @classmethod
    def fnpr(cls, n: int, p: int, r: int) -> "CarpetSpec":
        return validate_spec(cls(Family.FNPR, n=n, p=p, r=r))

    @classmethod
    def sm(cls, m: int) -> "CarpetSpec":
        return validate_spec(cls(Family.SM, m=m))

    @property
    def base(self) -> int:
        return self.m if self.family is Family.SM else self.n

    @property
    def hole_side(self) -> int:
        """Side of each removed square in units of one subdivision cell."""
        return 1 if self.family is Family.SM else self.r

    @property
    def hole_offsets(self) -> tuple[tuple[int, int], ...]:
        """Lower-left cells of the removed squares, in inner-circle order.

        For the corner families the order is lower left, lower right, upper
        right, upper left (M1..M4).
        """
        if self.family is Family.SM:
            c = (self.m - 1) // 2
            return ((c, c),)
        lo, hi = self.p, self.n - self.p - self.r
        return ((lo, lo), (hi, lo), (hi, hi), (lo, hi))

    @property
    def keep_count(self) -> int:
        """Number of subsquares kept per subdivision step."""
        return self.base ** 2 - len(self.hole_offsets) * self.hole_side ** 2

    @property
    def dimension(self) -> float:
        return math.log(self.keep_count) / math.log(self.base)

    @property
    def label(self) -> str:
        if self.family is Family.FNP:
            return f"F_{{{self.n},{self.p}}}"
        if self.family is Family.FNPR:
            return f"F_{{{self.n},{self.p},{self.r}}}"
        return f"S_{self.m}"

    @property
    def slug(self) -> str:
        if self.family is Family.FNP:
            return f"fnp-{self.n}-{self.p}"
        if self.family is Family.FNPR:
            return f"fnpr-{self.n}-{self.p}-{self.r}"
        return f"sm-{self.m}"

    def to_dict(self) -> dict:
        d = {"family": self.family.value}
        if self.family is Family.SM:
            d["m"] = self.m
        else:
            d.update(n=self.n, p=self.p)
            if self.family is Family.FNPR:
                d["r"] = self.r
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CarpetSpec":
        fam = Family(d["family"])
        if fam is Family.SM:
            return validate_spec(cls(fam, m=int(d["m"])))
        return validate_spec(cls(fam, n=int(d["n"]), p=int(d["p"]), r=int(d.get("r", 1))))


def validate_spec(spec: CarpetSpec) -> CarpetSpec:
    """Return ``spec`` unchanged if it satisfies its family's inequalities."""
    fam = spec.family
    if fam is Family.SM:
        if spec.m < 3:
            raise ConstraintViolation(f"S_m requires m >= 3 (got m={spec.m})")
        if spec.m % 2 == 0:
            raise ConstraintViolation(f"S_m requires m odd (got m={spec.m})")
        return spec
    n, p, r = spec.n, spec.p, spec.r
    if n < 5:
        raise ConstraintViolation(f"requires n >= 5 (got n={n})")
    if p < 1:
        raise ConstraintViolation(f"requires p >= 1 (got p={p})")
    if fam is Family.FNP:
        # p < n/2 - 1  <=>  2p < n - 2
        if not 2 * p < n - 2:
            raise ConstraintViolation(
                f"requires p < n/2 - 1 (got p={p}, n/2 - 1 = {Fraction(n, 2) - 1})")
    else:
        if r < 1:
            raise ConstraintViolation(f"requires r >= 1 (got r={r})")
        if not 2 * (p + r) < n:
            raise ConstraintViolation(
                f"requires p + r < n/2 (got p + r = {p + r}, n/2 = {Fraction(n, 2)})")
    return spec


# ---------------------------------------------------------------------------
# Cell grids


@lru_cache(maxsize=None)
def _level_one_mask(spec: CarpetSpec) -> np.ndarray:
    b, s = spec.base, spec.hole_side
    mask = np.ones((b, b), dtype=bool)
    for i, j in spec.hole_offsets:
        mask[i:i + s, j:j + s] = False
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True, eq=False)
class CellGrid:
    spec: CarpetSpec
    level: int
    occupied: np.ndarray = field(repr=False)

    @property
    def side(self) -> int:
        return self.occupied.shape[0]

    @property
    def count(self) -> int:
        return int(self.occupied.sum())

    def cell_box(self, i: int, j: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        N = self.side
        return (Fraction(i, N), Fraction(j, N), Fraction(i + 1, N), Fraction(j + 1, N))

    def __eq__(self, other):
        if not isinstance(other, CellGrid):
            return NotImplemented
        return (self.spec == other.spec and self.level == other.level
                and np.array_equal(self.occupied, other.occupied))

    __hash__ = None

    def to_json(self) -> dict:
        """Run-length encoding of the occupancy bitmap in row-major order."""
        flat = self.occupied.T.ravel().astype(np.int8)  # rows j, then columns i
        change = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate(([0], change, [flat.size]))
        return {
            "schema": "grid/1",
            "spec": self.spec.to_dict(),
            "level": self.level,
            "side": self.side,
            "order": "row-major",
            "start": int(flat[0]),
            "runs": np.diff(bounds).tolist(),
            "occupied": self.count,
        }

    @classmethod
    def from_json(cls, d: dict) -> "CellGrid":
        N = d["side"]
        vals = []
        v = d["start"]
        for run in d["runs"]:
            vals.extend([v] * run)
            v = 1 - v
        occ = np.array(vals, dtype=bool).reshape(N, N).T.copy()
        occ.setflags(write=False)
        return cls(CarpetSpec.from_dict(d["spec"]), d["level"], occ)


def generate(spec: CarpetSpec, k: int, max_cells: int = DEFAULT_MAX_CELLS) -> CellGrid:
    """Occupancy of the level-k approximation of ``spec``."""
    validate_spec(spec)
    if k < 0:
        raise ValueError("level must be >= 0")
    N = spec.base ** k
    if N * N > max_cells:
        raise BudgetExceeded(f"{N}x{N} grid exceeds the cell budget {max_cells}", count=N * N)
    return _generate(spec, k)


@lru_cache(maxsize=32)
def _generate(spec: CarpetSpec, k: int) -> CellGrid:
    occ = np.ones((1, 1), dtype=bool)
    mask = _level_one_mask(spec)
    for _ in range(k):
        occ = np.kron(occ, mask).astype(bool)
    occ.setflags(write=False)
    return CellGrid(spec, k, occ)


# ---------------------------------------------------------------------------
# Peripheral circles


class Role(str, enum.Enum):
    OUTER = "outer"
    HOLE = "hole"


@dataclass(frozen=True)
class PeripheralCircle:
    """One boundary square.

    ``cell`` is the anchor in units of ``base**-generation`` and ``parent`` is
    the level ``generation - 1`` cell whose subdivision removed the hole;
    ``slot`` is its position among that cell's inner circles.
    """

    id: int
    role: Role
    generation: int
    anchor: tuple[Fraction, Fraction]
    side: Fraction
    cell: tuple[int, int] = (0, 0)
    parent: tuple[int, int] | None = None
    slot: int | None = None

    @property
    def is_outer(self) -> bool:
        return self.role is Role.OUTER

    @property
    def box(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        x, y = self.anchor
        return (x, y, x + self.side, y + self.side)

    def to_json(self) -> dict:
        x, y = self.anchor
        return {
            "id": self.id,
            "role": self.role.value,
            "generation": self.generation,
            "anchor": [x.numerator, x.denominator, y.numerator, y.denominator],
            "side": [self.side.numerator, self.side.denominator],
        }


class Adjacency(str, enum.Enum):
    ADJACENT = "adjacent"
    NONADJACENT = "nonadjacent"


@dataclass(frozen=True)
class CopyBoundary:
    """Boundary of the scaled copy of the carpet living in a level-``level`` cell.

    It is a peripheral circle of the copy but, for ``level >= 1``, not of the
    full carpet.
    """

    level: int
    cell: tuple[int, int]

    def box(self, base: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        N = base ** self.level
        i, j = self.cell
        return (Fraction(i, N), Fraction(j, N), Fraction(i + 1, N), Fraction(j + 1, N))


class CircleCatalog(Sequence):
    """All peripheral circles of the level-k approximation, indexed by id.

    Ids are assigned generation-major and, within a generation, row-major by
    anchor (bottom row first, left to right).  Id 0 is the outer circle O.
    """

    def __init__(self, spec: CarpetSpec, level: int, circles: list[PeripheralCircle]):
        self.spec = spec
        self.level = level
        self._circles = tuple(circles)
        self._by_cell = {(c.generation, c.cell): c.id for c in circles if not c.is_outer}

    def __len__(self) -> int:
        return len(self._circles)

    def __getitem__(self, idx):
        return self._circles[idx]

    def __iter__(self) -> Iterator[PeripheralCircle]:
        return iter(self._circles)

    def __repr__(self) -> str:
        return f"CircleCatalog({self.spec.label}, level={self.level}, circles={len(self)})"

    def lookup(self, generation: int, cell: tuple[int, int]) -> int | None:
        if generation == 0:
            return 0
        return self._by_cell.get((generation, tuple(cell)))

    def holes(self, generation: int | None = None) -> list[PeripheralCircle]:
        return [c for c in self._circles
                if not c.is_outer and (generation is None or c.generation == generation)]

    def inner_circles(self) -> list[int]:
        """Ids of the generation-1 holes in slot order (M1, M2, ...)."""
        gen1 = sorted(self.holes(1), key=lambda c: c.slot)
        return [c.id for c in gen1]

    def name(self, cid: int) -> str:
        c = self._circles[cid]
        if c.is_outer:
            return "O"
        if c.generation == 1:
            return "M" if len(self.spec.hole_offsets) == 1 else f"M{c.slot + 1}"
        return f"C{cid}"

    def resolve(self, token) -> int:
        """Map a circle name ("O", "M1", "M", "C17") or integer id to an id."""
        if isinstance(token, (int, np.integer)):
            cid = int(token)
        else:
            t = str(token).strip()
            if t == "O":
                cid = 0
            elif t == "M" and len(self.spec.hole_offsets) == 1:
                cid = self.inner_circles()[0]
            elif t.startswith("M") and t[1:].isdigit():
                idx = int(t[1:]) - 1
                inner = self.inner_circles()
                if not 0 <= idx < len(inner):
                    raise KeyError(f"no inner circle {t}")
                cid = inner[idx]
            elif t.startswith("C") and t[1:].isdigit():
                cid = int(t[1:])
            elif t.isdigit():
                cid = int(t)
            else:
                raise KeyError(f"unknown circle name {t!r}")
        if not 0 <= cid < len(self):
            raise KeyError(f"circle id {cid} not in catalog of {len(self)} circles")
        return cid

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self._circles]


def catalog_size(spec: CarpetSpec, k: int) -> int:
    """Closed-form number of circles in the level-k catalog."""
    h = len(spec.hole_offsets)
    return 1 + h * sum(spec.keep_count ** j for j in range(k))


def circle_catalog(spec: CarpetSpec, k: int, max_circles: int = DEFAULT_MAX_CIRCLES) -> CircleCatalog:
    validate_spec(spec)
    if k < 0:
        raise ValueError("level must be >= 0")
    size = catalog_size(spec, k)
    if size > max_circles:
        raise BudgetExceeded(f"catalog of {size} circles exceeds budget {max_circles}", count=size)
    return _circle_catalog(spec, k)


@lru_cache(maxsize=32)
def _circle_catalog(spec: CarpetSpec, k: int) -> CircleCatalog:
    b, s = spec.base, spec.hole_side
    circles = [PeripheralCircle(0, Role.OUTER, 0, (Fraction(0), Fraction(0)), Fraction(1))]
    for g in range(1, k + 1):
        parents = np.argwhere(_generate(spec, g - 1).occupied)  # rows of (i, j)
        entries = []
        for slot, (oi, oj) in enumerate(spec.hole_offsets):
            for pi, pj in parents:
                entries.append((int(pj) * b + oj, int(pi) * b + oi, slot, (int(pi), int(pj))))
        entries.sort()
        N = b ** g
        for y, x, slot, parent in entries:
            circles.append(PeripheralCircle(
                id=len(circles), role=Role.HOLE, generation=g,
                anchor=(Fraction(x, N), Fraction(y, N)), side=Fraction(s, N),
                cell=(x, y), parent=parent, slot=slot))
    return CircleCatalog(spec, k, circles)


def circle_distance_sq(a: PeripheralCircle, b: PeripheralCircle) -> Fraction:
    """Squared Euclidean distance between two disjoint peripheral circles."""
    if a.is_outer and b.is_outer:
        return Fraction(0)
    if a.is_outer or b.is_outer:
        h = b if a.is_outer else a
        x0, y0, x1, y1 = h.box
        d = min(x0, y0, 1 - x1, 1 - y1)
        return d * d
    ax0, ay0, ax1, ay1 = a.box
    bx0, by0, bx1, by1 = b.box
    dx = max(Fraction(0), bx0 - ax1, ax0 - bx1)
    dy = max(Fraction(0), by0 - ay1, ay0 - by1)
    return dx * dx + dy * dy


def classify_pair(catalog: CircleCatalog, c1: int, c2: int) -> Adjacency:
    if c1 == c2:
        raise InvalidPair(f"pair ({c1}, {c2}) repeats a circle")
    a, b = catalog[c1], catalog[c2]
    if circle_distance_sq(a, b) == 0:
        raise InvalidPair(f"circles {c1} and {c2} are not disjoint")
    if a.is_outer or b.is_outer:
        return Adjacency.NONADJACENT
    if (len(catalog.spec.hole_offsets) > 1 and a.generation == b.generation
            and a.parent == b.parent):
        return Adjacency.ADJACENT
    return Adjacency.NONADJACENT


@dataclass(frozen=True)
class AffineCopy:
    """The copy ``x -> scale * x + translation`` of the carpet inside a cell.

    ``inner`` is the hole that plays the role of inner circle ``slot`` of the
    copy and ``outer`` its outer circle (an id for the full carpet, otherwise
    a :class:`CopyBoundary`).
    """

    spec: CarpetSpec
    level: int
    cell: tuple[int, int]
    scale: Fraction
    translation: tuple[Fraction, Fraction]
    inner: int
    slot: int
    outer: int | CopyBoundary

    def map_point(self, x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
        tx, ty = self.translation
        return (tx + self.scale * x, ty + self.scale * y)

    def correspondence(self, catalog: CircleCatalog,
                       base: CircleCatalog | None = None) -> dict[int, int | CopyBoundary]:
        """Map base-carpet circle ids to the circles of this copy.

        ``base`` defaults to the catalog at level ``catalog.level - self.level``,
        which is the resolution at which the copy is represented in
        ``catalog``.
        """
        if base is None:
            base = circle_catalog(self.spec, catalog.level - self.level)
        if base.level + self.level != catalog.level:
            raise ValueError("base catalog level does not match the copy depth")
        b = self.spec.base
        ci, cj = self.cell
        out: dict[int, int | CopyBoundary] = {}
        for c in base:
            if c.is_outer:
                out[c.id] = self.outer
                continue
            scale = b ** c.generation
            cell = (ci * scale + c.cell[0], cj * scale + c.cell[1])
            target = catalog.lookup(c.generation + self.level, cell)
            if target is None:
                raise KeyError(f"copy circle for base id {c.id} missing from catalog")
            out[c.id] = target
        return out


def subcarpet_map(catalog: CircleCatalog, cid: int) -> AffineCopy:
    """The copy whose generation-1 inner circle is hole ``cid``."""
    c = catalog[cid]
    if c.is_outer:
        raise NotAHole("the outer circle is not an inner circle of any copy")
    lvl = c.generation - 1
    N = catalog.spec.base ** lvl
    pi, pj = c.parent
    outer: int | CopyBoundary = 0 if lvl == 0 else CopyBoundary(lvl, c.parent)
    return AffineCopy(catalog.spec, lvl, c.parent, Fraction(1, N),
                      (Fraction(pi, N), Fraction(pj, N)), cid, c.slot, outer)


def catalog_json(catalog: CircleCatalog) -> str:
    return json.dumps(catalog.to_json(), separators=(",", ":"))
