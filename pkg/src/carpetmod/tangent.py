"""Finite windows of the weak tangents at the origin and at a hole corner.

The tangent at the origin is the increasing union of the scaled copies
``n**j * F``.  A window keeps the copies ``0 <= j <= w``, each resolved to
``d`` generations of holes.  Hole squares of ``n**j * F`` that lie inside
``n**(j-1) * Q0`` are coarser duplicates of holes of the previous copy, so each
copy only contributes its holes in the annulus ``n**j Q0 minus n**(j-1) Q0``.

The corner tangent pastes three copies of the origin tangent into the second,
third and fourth quadrants (the images under ``i``, ``-1`` and ``-i``).

Everything is exact rational geometry except the angular widths, which are a
single ``atan2`` of exactly computed cross and dot products (absolute error
below 1e-15 rad).
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .carpet import CarpetSpec, catalog_size, circle_catalog, validate_spec
from .errors import BudgetExceeded, UnmappedCircle

DEFAULT_MAX_HOLES = 500_000
DEFAULT_SEED = 20240917
N_RADII = 32


class WindowKind(str, enum.Enum):
    ORIGIN = "origin"
    CORNER = "corner"


# Quadrant rotations used by the corner tangent, as (a, b, c, d) acting by
# (x, y) -> (a x + b y, c x + d y).
_QUADRANT_MAPS = {
    "1": (1, 0, 0, 1),
    "i": (0, -1, 1, 0),
    "-1": (-1, 0, 0, -1),
    "-i": (0, 1, -1, 0),
}


@dataclass(frozen=True, order=True)
class TangentHole:
    """A removed square of a window, ``[x, x+side] x [y, y+side]``."""

    x: Fraction
    y: Fraction
    side: Fraction
    copy: int = field(compare=False, default=0)
    quadrant: str = field(compare=False, default="1")
    generation: int = field(compare=False, default=1)

    @property
    def key(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.x, self.y, self.side)

    def corners(self):
        s = self.side
        return ((self.x, self.y), (self.x + s, self.y), (self.x + s, self.y + s), (self.x, self.y + s))

    def to_json(self) -> dict:
        return {"anchor": [str(self.x), str(self.y)], "side": str(self.side),
                "copy": self.copy, "quadrant": self.quadrant, "generation": self.generation}


def _transform(hole: TangentHole, quadrant: str) -> TangentHole:
    a, b, c, d = _QUADRANT_MAPS[quadrant]
    pts = [(a * x + b * y, c * x + d * y) for x, y in hole.corners()]
    return TangentHole(min(p[0] for p in pts), min(p[1] for p in pts), hole.side,
                       hole.copy, quadrant, hole.generation)


def _copy_holes(spec: CarpetSpec, depth: int, j: int, annulus_only: bool) -> list[TangentHole]:
    """Holes of ``n**j F`` to ``depth`` generations; optionally only those outside ``n**(j-1) Q0``."""
    scale = Fraction(spec.base) ** j
    inner = scale / spec.base
    out = []
    for c in circle_catalog(spec, depth).holes():
        x, y, s = c.anchor[0] * scale, c.anchor[1] * scale, c.side * scale
        if annulus_only and x + s <= inner and y + s <= inner:
            continue
        out.append(TangentHole(x, y, s, j, "1", c.generation))
    return out


def annulus_holes(spec: CarpetSpec, depth: int) -> list[TangentHole]:
    """Holes in the fundamental annulus ``closure(n Q0 minus Q0)``, resolved ``depth`` generations."""
    return _copy_holes(spec, depth, 1, annulus_only=True)


@dataclass(frozen=True)
class TangentWindow:
    spec: CarpetSpec
    w: int
    d: int
    kind: WindowKind
    holes: tuple[TangentHole, ...]

    @property
    def quadrants(self) -> tuple[str, ...]:
        return ("1",) if self.kind is WindowKind.ORIGIN else ("i", "-1", "-i")

    def annulus(self) -> list[TangentHole]:
        """Holes of the window lying in the fundamental annulus of each quadrant."""
        base = annulus_holes(self.spec, self.d)
        return [_transform(h, q) for q in self.quadrants for h in base]

    def index(self) -> dict:
        return {h.key: h for h in self.holes}


def build_window(spec: CarpetSpec, w: int, d: int, kind: WindowKind | str = WindowKind.ORIGIN,
                 max_holes: int = DEFAULT_MAX_HOLES) -> TangentWindow:
    validate_spec(spec)
    kind = WindowKind(kind)
    if w < 0 or d < 1:
        raise ValueError("window exponent must be >= 0 and depth >= 1")
    per_copy = catalog_size(spec, d) - 1
    n_quadrants = 1 if kind is WindowKind.ORIGIN else 3
    if per_copy * (w + 1) * n_quadrants > max_holes:
        raise BudgetExceeded(f"window needs up to {per_copy * (w + 1) * n_quadrants} holes "
                             f"(budget {max_holes})", per_copy * (w + 1) * n_quadrants)
    base: list[TangentHole] = []
    for j in range(w + 1):
        base.extend(_copy_holes(spec, d, j, annulus_only=j > 0))
    if kind is WindowKind.ORIGIN:
        holes = base
    else:
        holes = [_transform(h, q) for q in ("i", "-1", "-i") for h in base]
    return TangentWindow(spec, w, d, kind, tuple(sorted(holes)))


def quadrants_disjoint(window: TangentWindow) -> bool:
    """Every hole of every copy sits in the open quadrant of its copy."""
    sign = {"1": (1, 1), "i": (-1, 1), "-1": (-1, -1), "-i": (1, -1)}
    for h in window.holes:
        sx, sy = sign[h.quadrant]
        for x, y in h.corners():
            if x * sx <= 0 or y * sy <= 0:
                return False
    return True


# ---------------------------------------------------------------------------
# Projection mass


def theta(hole: TangentHole) -> float:
    """Angular width of the radial shadow of a first-quadrant square.

    The extreme directions are the upper-left and lower-right corners; the
    angle between them is ``atan2(u x v, u . v)``, with ``u`` and ``v`` exact.
    """
    x, y, s = hole.x, hole.y, hole.side
    if x < 0 or y < 0:
        raise ValueError("theta is defined for first-quadrant squares")
    ux, uy = x + s, y
    vx, vy = x, y + s
    return math.atan2(float(ux * vy - uy * vx), float(ux * vx + uy * vy))


def projection_rho(hole: TangentHole) -> float:
    return 2.0 * theta(hole) / math.pi


@dataclass
class ProjectionMassReport:
    spec: CarpetSpec
    depth: int
    holes: list[TangentHole]
    theta: list[float]
    rho: list[float]
    K: float
    mass: float
    area: Fraction
    area_constant: int

    @property
    def bound(self) -> float:
        return (2.0 * self.K / math.pi) ** 2 * self.area_constant

    @property
    def slack(self) -> float:
        return self.bound - self.mass

    def to_json(self) -> dict:
        return {
            "schema": "tg-report/1",
            "spec": self.spec.to_dict(),
            "depth": self.depth,
            "n_circles": len(self.holes),
            "K": self.K,
            "mass": self.mass,
            "bound": self.bound,
            "bound_slack": self.slack,
            "area": str(self.area),
            "area_constant": self.area_constant,
            "circles": [
                {**h.to_json(), "theta": t, "rho": r}
                for h, t, r in zip(self.holes, self.theta, self.rho)
            ],
        }


def projection_mass(window: TangentWindow, depth: int | None = None) -> ProjectionMassReport:
    """Projection distribution on the fundamental annulus, one circle per scaling orbit."""
    if window.kind is not WindowKind.ORIGIN:
        raise ValueError("projection mass is defined on the origin window")
    depth = window.d if depth is None else depth
    holes = annulus_holes(window.spec, depth)
    th = [theta(h) for h in holes]
    rho = [2.0 * t / math.pi for t in th]
    K = max(t / float(h.side) for h, t in zip(holes, th))
    return ProjectionMassReport(
        spec=window.spec, depth=depth, holes=holes, theta=th, rho=rho, K=K,
        mass=math.fsum(r * r for r in rho),
        area=sum((h.side ** 2 for h in holes), Fraction(0)),
        area_constant=window.spec.base ** 2 - 1,
    )


# ---------------------------------------------------------------------------
# Sampled admissibility


def touched_holes(spec: CarpetSpec, depth: int, i: int, j: int,
                  corner_touch: bool = True) -> list[tuple[int, int, int, int]]:
    """Holes of ``F`` (to ``depth``) met by the closed level-``depth`` cell ``(i, j)``.

    Holes are returned as integer boxes ``(x0, y0, x1, y1)`` in level-``depth``
    cell units.  A hole lies strictly inside its parent cell, so only the
    parents on the cell's own ancestor chain can contribute.
    """
    n, r = spec.base, spec.hole_side
    out = []
    for g in range(1, depth + 1):
        u = n ** (depth - g)
        P = u * n
        px, py = (i // P) * P, (j // P) * P
        inside = False
        for ox, oy in spec.hole_offsets:
            x0, y0 = px + ox * u, py + oy * u
            x1, y1 = x0 + r * u, y0 + r * u
            if i + 1 < x0 or i > x1 or j + 1 < y0 or j > y1:
                continue
            if not corner_touch and (i + 1 == x0 or i == x1) and (j + 1 == y0 or j == y1):
                continue
            out.append((x0, y0, x1, y1))
            if x0 <= i < x1 and y0 <= j < y1:
                inside = True
        if inside:
            break
    return out


def staircase(N: int, R: Fraction) -> list[tuple[int, int]]:
    """4-connected cell chain from row 0 to column 0 tracking the circle of radius ``R``.

    Coordinates are in cell units of an ``N x N`` grid; at each step the move
    (left or up) whose cell centre is closer to the circle is taken.
    """
    i = min(int(R), N - 1)
    j = 0
    path = [(i, j)]
    R2 = R * R

    def err(c):
        x, y = Fraction(2 * c[0] + 1, 2), Fraction(2 * c[1] + 1, 2)
        return abs(x * x + y * y - R2)

    while i > 0:
        moves = [(i - 1, j)] + ([(i, j + 1)] if j < N - 1 else [])
        i, j = min(moves, key=err)
        path.append((i, j))
    return path


def axis_hugging(N: int, R: int) -> list[tuple[int, int]]:
    """Along row 0 from column ``R`` to the corner cell, then up column 0 to row ``R``."""
    R = min(R, N - 1)
    return [(i, 0) for i in range(R, -1, -1)] + [(0, j) for j in range(1, R + 1)]


@dataclass(frozen=True)
class SamplePath:
    name: str
    cells: tuple[tuple[int, int], ...]


@dataclass
class AdmissibilityReport:
    depth: int
    copy: int
    sums: dict[str, float]
    tol: float

    @property
    def minimum(self) -> float:
        return min(self.sums.values())

    @property
    def worst(self) -> str:
        return min(self.sums, key=self.sums.get)

    @property
    def violated(self) -> bool:
        return self.minimum < 1.0 - self.tol

    def to_json(self) -> dict:
        return {"depth": self.depth, "copy": self.copy, "minimum": self.minimum,
                "worst_path": self.worst, "violated": self.violated, "tol": self.tol,
                "sums": self.sums, "mode": "sampled admissibility"}


def sample_paths(spec: CarpetSpec, depth: int, seed: int = DEFAULT_SEED,
                 n_radii: int = N_RADII) -> list[SamplePath]:
    """The deterministic path family on the grid of the copy ``n F`` at ``depth``.

    Staircase arcs use one radius per stratum of ``(1, n)`` (jittered by
    ``seed``); axis-hugging paths turn at the grid column of each integer
    radius ``1..n-1`` and at the far edge.
    """
    n = spec.base
    N = n ** depth
    unit = Fraction(N, n)  # cells per unit length
    rng = random.Random(seed)
    paths = []
    for t in range(n_radii):
        u = Fraction(rng.randrange(1, 1000), 1000)
        R = (1 + (n - 1) * (t + u) / n_radii) * unit
        paths.append(SamplePath(f"arc[{float(R / unit):.4f}]", tuple(staircase(N, R))))
    for R in list(range(1, n)) + [n]:
        paths.append(SamplePath(f"axes[{R}]", tuple(axis_hugging(N, int(R * unit)))))
    return paths


def path_circles(spec: CarpetSpec, depth: int, cells: Iterable[tuple[int, int]],
                 scale: Fraction, corner_touch: bool = True) -> set[TangentHole]:
    """Distinct holes of ``scale * F`` met by a cell chain of its level-``depth`` grid."""
    unit = scale / spec.base ** depth
    met = set()
    for i, j in cells:
        for x0, y0, x1, _ in touched_holes(spec, depth, i, j, corner_touch):
            met.add(TangentHole(x0 * unit, y0 * unit, (x1 - x0) * unit))
    return met


def admissibility_sample(window: TangentWindow, rho: Callable[[TangentHole], float] = projection_rho,
                         paths: Sequence[SamplePath] | None = None, seed: int = DEFAULT_SEED,
                         tol: float = 1e-9, corner_touch: bool = True,
                         depth: int | None = None) -> AdmissibilityReport:
    """Sum ``rho`` over the distinct circles met by each sampled quarter-plane path.

    Paths live on the level-``d`` grid of the copy ``n F``, which spans the
    first fundamental annulus and the unit square inside it.  ``depth``
    overrides the window depth; holes are found arithmetically, so a deep
    sample needs no materialized window.
    """
    spec = window.spec
    d = window.d if depth is None else depth
    if paths is None:
        paths = sample_paths(spec, d, seed)
    scale = Fraction(spec.base)
    sums = {}
    for path in paths:
        met = path_circles(spec, d, path.cells, scale, corner_touch)
        sums[path.name] = math.fsum(rho(h) for h in sorted(met))
    return AdmissibilityReport(d, 1, sums, tol)


# ---------------------------------------------------------------------------
# Transfer to the corner tangent


_REFLECTIONS = {  # element of the group generated by the two axis reflections
    "1": (1, 1),
    "i": (-1, 1),
    "-1": (-1, -1),
    "-i": (1, -1),
}


def reflect_to_first(hole: TangentHole) -> TangentHole:
    """The unique axis-reflection image of ``hole`` in the open first quadrant."""
    for sx, sy in _REFLECTIONS.values():
        xs = sorted((sx * hole.x, sx * (hole.x + hole.side)))
        ys = sorted((sy * hole.y, sy * (hole.y + hole.side)))
        if xs[0] > 0 and ys[0] > 0:
            return TangentHole(xs[0], ys[0], hole.side, hole.copy, "1", hole.generation)
    raise UnmappedCircle(f"hole at ({hole.x}, {hole.y}) touches an axis")


@dataclass
class TransferReport:
    rho: dict[tuple, Fraction]          # origin annulus circle key -> weight
    rho_tilde: dict[tuple, Fraction]    # corner annulus circle key -> weight
    mass: Fraction
    mass_tilde: Fraction
    corner_sums: dict[str, float]

    @property
    def exact(self) -> bool:
        return self.mass_tilde * 3 == self.mass

    def to_json(self) -> dict:
        return {"mass": float(self.mass), "mass_tilde": float(self.mass_tilde),
                "ratio": str(self.mass_tilde / self.mass) if self.mass else None,
                "exact_third": self.exact,
                "corner_min_sum": min(self.corner_sums.values()) if self.corner_sums else None}


def third_transfer(origin: TangentWindow, corner: TangentWindow,
                   rho: Callable[[TangentHole], float] = projection_rho,
                   sample: bool = True, seed: int = DEFAULT_SEED) -> TransferReport:
    """Pull ``rho`` back to the corner window with weight one third.

    Weights are carried as exact rationals of the given floats, so the mass
    identity is checked without rounding.  Every corner hole must reflect
    onto a hole of the origin window; otherwise :class:`UnmappedCircle`.
    """
    if origin.kind is not WindowKind.ORIGIN or corner.kind is not WindowKind.CORNER:
        raise ValueError("third_transfer maps an origin window to a corner window")
    known = origin.index()
    for h in corner.holes:
        if reflect_to_first(h).key not in known:
            raise UnmappedCircle(f"corner hole {h.key} has no origin counterpart")
    base = annulus_holes(origin.spec, origin.d)
    rho_q = {h.key: Fraction(rho(h)) for h in base}
    rho_t = {}
    for h in corner.annulus():
        rho_t[h.key] = rho_q[reflect_to_first(h).key] / 3
    mass = sum((v * v for v in rho_q.values()), Fraction(0))
    mass_t = sum((v * v for v in rho_t.values()), Fraction(0))
    sums = {}
    if sample:
        spec, d = origin.spec, origin.d
        scale = Fraction(spec.base)
        for path in sample_paths(spec, d, seed):
            # a corner path made of the three mirror images of one quadrant path
            met = path_circles(spec, d, path.cells, scale)
            total = Fraction(0)
            for q in corner.quadrants:
                sx, sy = _REFLECTIONS[q]
                for h in met:
                    xs = sorted((sx * h.x, sx * (h.x + h.side)))
                    ys = sorted((sy * h.y, sy * (h.y + h.side)))
                    mirrored = TangentHole(xs[0], ys[0], h.side, 0, q)
                    total += Fraction(rho(reflect_to_first(mirrored))) / 3
            sums[path.name] = float(total)
    return TransferReport(rho_q, rho_t, mass, mass_t, sums)
