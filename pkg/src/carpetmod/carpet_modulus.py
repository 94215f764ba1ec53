"""Discrete carpet modulus of the family of paths joining two peripheral circles.

The level-k instance lives on the N x N cell grid (N = base**k).  A cell meets
a circle when the closed cell intersects the closed region bounded by it (the
closed square for a hole, the closed exterior of the unit square for O).
With ``corner_touch`` off, contact in a single corner point does not count.

For the family of paths joining ``c1`` and ``c2``:

* the two endpoint regions are closed obstacles: every cell meeting either is
  removed from the graph;
* a path is a 4-connected sequence of the remaining cells that starts next to
  (edge-sharing with) a cell removed for ``c1`` and ends next to one removed
  for ``c2``; holes other than the endpoints are traversable;
* unless an endpoint is O (or the boundary of a sub-copy, which encloses O),
  the exterior of the unit square is one extra node meeting only O and
  adjacent to every boundary cell;
* a path is charged once for each distinct circle it meets.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .carpet import (Adjacency, CarpetSpec, CircleCatalog, CopyBoundary, circle_catalog,
                     circle_distance_sq, classify_pair, subcarpet_map)
from .errors import InvalidPair, LevelMismatch, NoPath
from .grid_modulus import (DEFAULT_TOL, ModulusReport, PathProblem, Tolerances,
                           brute_force_modulus, discrete_modulus, encode_value)
from .symmetry import (SymmetryElement, dihedral_group, element, map_boundary,
                       map_circle, orbits)

EXTERIOR = "ext"
Endpoint = "int | CopyBoundary"


# ---------------------------------------------------------------------------
# Touch incidence


@dataclass(frozen=True, eq=False)
class TouchIncidence:
    """For every cell of the grid, the sorted ids of the circles it meets."""

    spec: CarpetSpec
    level: int
    corner_touch: bool
    cells: tuple[tuple[int, ...], ...]  # indexed by j * N + i

    @property
    def side(self) -> int:
        return self.spec.base ** self.level

    def at(self, i: int, j: int) -> tuple[int, ...]:
        return self.cells[j * self.side + i]


def _hole_span(circle, spec: CarpetSpec, level: int) -> tuple[int, int, int, int]:
    """Cell-unit box ``(x0, y0, x1, y1)`` of a hole at ``level``."""
    s = spec.base ** (level - circle.generation)
    x0, y0 = circle.cell[0] * s, circle.cell[1] * s
    w = spec.hole_side * s
    return x0, y0, x0 + w, y0 + w


def _touching_cells(x0, y0, x1, y1, N, corner_touch):
    """Cells ``(i, j)`` whose closed cell meets the closed box [x0,x1]x[y0,y1]."""
    out = []
    for j in range(max(y0 - 1, 0), min(y1, N - 1) + 1):
        for i in range(max(x0 - 1, 0), min(x1, N - 1) + 1):
            if not corner_touch and i in (x0 - 1, x1) and j in (y0 - 1, y1):
                continue
            out.append((i, j))
    return out


def build_touch_incidence(grid, catalog: CircleCatalog, corner_touch: bool = True) -> TouchIncidence:
    if grid.level != catalog.level or grid.spec != catalog.spec:
        raise LevelMismatch("grid and catalog describe different instances")
    return _touch_incidence(catalog.spec, catalog.level, bool(corner_touch))


@lru_cache(maxsize=16)
def _touch_incidence(spec: CarpetSpec, level: int, corner_touch: bool) -> TouchIncidence:
    catalog = circle_catalog(spec, level)
    N = spec.base ** level
    sets: list[list[int]] = [[] for _ in range(N * N)]
    for i in range(N):
        for j in (0, N - 1):
            sets[j * N + i].append(0)
    for j in range(1, N - 1):
        for i in (0, N - 1):
            sets[j * N + i].append(0)
    for c in catalog.holes():
        for i, j in _touching_cells(*_hole_span(c, spec, level), N, corner_touch):
            sets[j * N + i].append(c.id)
    return TouchIncidence(spec, level, corner_touch, tuple(tuple(sorted(set(s))) for s in sets))


# ---------------------------------------------------------------------------
# Families and compiled instances


@dataclass(frozen=True)
class PathFamilySpec:
    spec: CarpetSpec
    level: int
    c1: int | CopyBoundary
    c2: int | CopyBoundary
    corner_touch: bool = True

    def __post_init__(self):
        for c in (self.c1, self.c2):
            if isinstance(c, CopyBoundary):
                if not 0 <= c.level <= self.level:
                    raise LevelMismatch(f"copy level {c.level} deeper than instance level {self.level}")
            elif not isinstance(c, (int, np.integer)):
                raise TypeError(f"endpoint must be a circle id or CopyBoundary, got {c!r}")
        if self.c1 == self.c2:
            raise InvalidPair("the two endpoints coincide")

    @property
    def catalog(self) -> CircleCatalog:
        return circle_catalog(self.spec, self.level)

    def validate(self) -> "PathFamilySpec":
        cat = self.catalog
        for c in (self.c1, self.c2):
            if isinstance(c, (int, np.integer)) and not 0 <= c < len(cat):
                raise InvalidPair(f"circle {c} not in the level-{self.level} catalog")
        if not isinstance(self.c1, CopyBoundary) and not isinstance(self.c2, CopyBoundary):
            if circle_distance_sq(cat[self.c1], cat[self.c2]) == 0:
                raise InvalidPair("endpoint circles are not disjoint")
        return self

    def swapped(self) -> "PathFamilySpec":
        return replace(self, c1=self.c2, c2=self.c1)

    def mapped(self, g: SymmetryElement) -> "PathFamilySpec":
        cat = self.catalog

        def m(c):
            if isinstance(c, CopyBoundary):
                return map_boundary(g, c, self.spec.base)
            return map_circle(g, cat[c], cat).id

        return replace(self, c1=m(self.c1), c2=m(self.c2))

    def endpoint_json(self, c):
        if isinstance(c, CopyBoundary):
            return {"copy_level": c.level, "cell": list(c.cell)}
        return int(c)

    def key(self) -> dict:
        return {"spec": self.spec.to_dict(), "level": self.level,
                "pair": [self.endpoint_json(self.c1), self.endpoint_json(self.c2)],
                "corner_touch": self.corner_touch}


@dataclass(frozen=True, eq=False)
class CarpetInstance:
    """A family compiled to a :class:`PathProblem`.

    ``nodes`` lists the graph nodes: cells ``(i, j)`` in row-major order, then
    optionally :data:`EXTERIOR`, then the virtual start and end nodes.
    ``circles[v]`` is the circle id carried by variable ``v``.
    """

    family: PathFamilySpec
    problem: PathProblem
    nodes: tuple
    circles: tuple[int, ...]
    blocked: np.ndarray

    @property
    def source(self) -> int:
        return len(self.nodes) - 2

    @property
    def target(self) -> int:
        return len(self.nodes) - 1

    def cell_path(self, path: Sequence[int]) -> list:
        return [self.nodes[v] for v in path if v < self.source]


def _blocked_mask(endpoint, spec: CarpetSpec, level: int, inc: TouchIncidence) -> np.ndarray:
    N = spec.base ** level
    mask = np.zeros((N, N), dtype=bool)
    if isinstance(endpoint, CopyBoundary):
        s = spec.base ** (level - endpoint.level)
        x0, y0 = endpoint.cell[0] * s, endpoint.cell[1] * s
        mask[:, :] = True
        mask[x0 + 1:x0 + s - 1, y0 + 1:y0 + s - 1] = False
        return mask
    if endpoint == 0:
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask
    c = circle_catalog(spec, level)[endpoint]
    for i, j in _touching_cells(*_hole_span(c, spec, level), N, inc.corner_touch):
        mask[i, j] = True
    return mask


def compile_family(family: PathFamilySpec, fix_endpoints: bool = True,
                   variables_of: dict[int, int] | None = None) -> CarpetInstance:
    """Build the path problem for ``family``.

    ``variables_of`` optionally maps circle ids to shared variable indices
    (used for orbit-invariant distributions); by default every circle met by
    the graph gets its own variable, ordered by id.
    """
    family.validate()
    spec, level = family.spec, family.level
    N = spec.base ** level
    inc = _touch_incidence(spec, level, family.corner_touch)
    b1 = _blocked_mask(family.c1, spec, level, inc)
    b2 = _blocked_mask(family.c2, spec, level, inc)
    blocked = b1 | b2
    free = ~blocked
    endpoints = {c for c in (family.c1, family.c2) if not isinstance(c, CopyBoundary)}
    drop = endpoints if fix_endpoints else set()
    exterior = not any(isinstance(c, CopyBoundary) or c == 0 for c in (family.c1, family.c2))

    cells = [(i, j) for j in range(N) for i in range(N) if free[i, j]]
    index = {c: k for k, c in enumerate(cells)}
    nodes: list = list(cells)
    touch = [tuple(c for c in inc.at(i, j) if c not in drop) for i, j in cells]
    if exterior:
        nodes.append(EXTERIOR)
        touch.append((0,))
    src, dst = len(nodes), len(nodes) + 1
    nodes += ["start", "end"]
    touch += [(), ()]

    edges = []
    for (i, j), k in index.items():
        if i + 1 < N and free[i + 1, j]:
            edges.append((k, index[(i + 1, j)]))
        if j + 1 < N and free[i, j + 1]:
            edges.append((k, index[(i, j + 1)]))

    def near(mask):
        # free cells sharing an edge with a masked cell
        out = set()
        for (i, j), k in index.items():
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < N and 0 <= b < N and mask[a, b]:
                    out.add(k)
                    break
        return out

    s_cells, t_cells = near(b1), near(b2)
    if exterior:
        ext = index.__len__()
        ring = [k for (i, j), k in index.items() if i in (0, N - 1) or j in (0, N - 1)]
        edges += [(k, ext) for k in ring]
        ring_mask = np.zeros((N, N), dtype=bool)
        ring_mask[0, :] = ring_mask[-1, :] = ring_mask[:, 0] = ring_mask[:, -1] = True
        if (b1 & ring_mask).any():
            s_cells.add(ext)
        if (b2 & ring_mask).any():
            t_cells.add(ext)
    edges += [(src, k) for k in sorted(s_cells)] + [(k, dst) for k in sorted(t_cells)]

    met = sorted({c for t in touch for c in t})
    if variables_of is None:
        group_of = {c: g for g, c in enumerate(met)}
        variables = None
        circles = tuple(met)
    else:
        group_of = {c: g for g, c in enumerate(met)}
        used = sorted({variables_of[c] for c in met})
        dense = {v: k for k, v in enumerate(used)}
        variables = tuple(dense[variables_of[c]] for c in met)
        circles = tuple(met)
    groups = tuple(tuple(group_of[c] for c in t) for t in touch)
    problem = PathProblem(len(nodes), tuple(edges), groups, frozenset({src}),
                          frozenset({dst}), variables)
    blocked.setflags(write=False)
    return CarpetInstance(family, problem, tuple(nodes), circles, blocked)


# ---------------------------------------------------------------------------
# Reports


@dataclass
class CarpetModulusReport:
    family: PathFamilySpec
    report: ModulusReport
    rho: dict[int, float]
    active_paths: list[list]
    orbits: list[list[int]] | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.report.value

    @property
    def status(self) -> str:
        return self.report.status

    def to_json(self) -> dict:
        f = self.family
        rep = self.report
        d = {
            "schema": "cm-report/1",
            "spec": f.spec.to_dict(),
            "level": f.level,
            "pair": [f.endpoint_json(f.c1), f.endpoint_json(f.c2)],
            "corner_touch": f.corner_touch,
            "status": rep.status,
            "value": encode_value(rep.value),
            "rho": [{"circle_id": int(c), "weight": float(w)} for c, w in sorted(self.rho.items())],
            "active_paths": [[list(c) if isinstance(c, tuple) else c for c in p]
                             for p in self.active_paths],
            "diagnostics": {
                "method": rep.method,
                "iterations": rep.iterations,
                "constraints": rep.n_constraints,
                "max_violation": rep.max_violation,
                "lower": encode_value(rep.lower),
                "upper": encode_value(rep.upper),
            },
        }
        if self.orbits is not None:
            d["orbits"] = self.orbits
        if self.flags:
            d["flags"] = list(self.flags)
        return d


def _wrap(inst: CarpetInstance, rep: ModulusReport, orbit_map=None, flags=()) -> CarpetModulusReport:
    if orbit_map is None:
        rho = {c: float(rep.weights[k]) for k, c in enumerate(inst.circles)}
    else:
        variables = inst.problem.variables
        rho = {c: float(rep.weights[variables[k]]) if rep.weights.size else 0.0
               for k, c in enumerate(inst.circles)}
    for c in (inst.family.c1, inst.family.c2):
        if not isinstance(c, CopyBoundary):
            rho.setdefault(int(c), 0.0)
    active = [inst.cell_path(p) for p in rep.active]
    return CarpetModulusReport(inst.family, rep, rho, active, orbit_map, list(flags))


def _solve(inst: CarpetInstance, tol: Tolerances, start=None) -> ModulusReport:
    try:
        return discrete_modulus(inst.problem, tol, start=start)
    except NoPath as exc:
        if exc.report is not None:
            exc.report.method = "constraint-generation"
        raise


def carpet_modulus(family: PathFamilySpec, tol: Tolerances = DEFAULT_TOL,
                   start=None, fix_endpoints: bool = True) -> CarpetModulusReport:
    """Level-k carpet modulus of the paths joining ``family.c1`` and ``family.c2``.

    ``start`` is an optional warm start, a mapping circle id -> weight.  It
    only changes the initial constraint pool, never the optimum.
    """
    inst = compile_family(family, fix_endpoints=fix_endpoints)
    w0 = None
    if start is not None:
        w0 = np.array([max(float(start.get(c, 0.0)), 0.0) for c in inst.circles])
    rep = _solve(inst, tol, w0)
    return _wrap(inst, rep)


def brute_force_carpet_modulus(family: PathFamilySpec, path_budget: int = 200_000,
                               tol: Tolerances = DEFAULT_TOL) -> CarpetModulusReport:
    inst = compile_family(family)
    rep = brute_force_modulus(inst.problem, path_budget, tol)
    return _wrap(inst, rep)


# ---------------------------------------------------------------------------
# Group-invariant modulus


@dataclass(frozen=True)
class GroupQuotientSpec:
    generators: tuple[str, ...]
    orbits: tuple[tuple[int, ...], ...]

    @classmethod
    def build(cls, catalog: CircleCatalog, generators: Iterable[str]) -> "GroupQuotientSpec":
        names = tuple(generators)
        gens = [element(n) for n in names]
        return cls(names, tuple(tuple(o) for o in orbits(catalog, gens)))

    @property
    def variable_of(self) -> dict[int, int]:
        return {c: k for k, orb in enumerate(self.orbits) for c in orb}


GROUP_PRESETS = {
    "trivial": (),
    "d4": ("R_D", "R_V"),
    "c4": ("rot90",),
    "c2": ("rot180",),
    "diag": ("R_D",),
    "vert": ("R_V",),
}


def group_carpet_modulus(family: PathFamilySpec, q: GroupQuotientSpec,
                         tol: Tolerances = DEFAULT_TOL) -> CarpetModulusReport:
    """Modulus over orbit-invariant distributions, one objective term per orbit.

    A path meeting several circles of one orbit is charged once per circle.
    The endpoint circles are never charged; if their orbits are larger than
    themselves the report carries the flag ``endpoint-orbit-nontrivial``.
    """
    cat = family.catalog
    if sorted(c for o in q.orbits for c in o) != list(range(len(cat))):
        raise ValueError("orbits do not partition the catalog")
    var = q.variable_of
    flags = []
    for c in (family.c1, family.c2):
        if not isinstance(c, CopyBoundary) and len(q.orbits[var[c]]) > 1:
            flags.append("endpoint-orbit-nontrivial")
            break
    inst = compile_family(family, variables_of=var)
    rep = _solve(inst, tol)
    used = sorted({var[c] for c in inst.circles})
    orbit_list = [list(q.orbits[v]) for v in used]
    return _wrap(inst, rep, orbit_map=orbit_list, flags=flags)


def symmetrized_mass(report: CarpetModulusReport) -> float:
    """Per-circle mass of an orbit-invariant solution."""
    return float(sum(w * w for w in report.rho.values()))


# ---------------------------------------------------------------------------
# Self-similarity


def instances_isomorphic(a: CarpetInstance, b: CarpetInstance) -> bool:
    pa, pb = a.problem, b.problem
    return (pa.n_nodes == pb.n_nodes and pa.edges == pb.edges and pa.groups == pb.groups
            and pa.sources == pb.sources and pa.targets == pb.targets
            and pa.variables == pb.variables)


def copy_family(catalog: CircleCatalog, cid: int, corner_touch: bool = True) -> PathFamilySpec:
    """Paths joining hole ``cid`` and the outer circle of its copy."""
    cp = subcarpet_map(catalog, cid)
    return PathFamilySpec(catalog.spec, catalog.level, cid, cp.outer, corner_touch)


def self_similarity_check(family: PathFamilySpec, base: PathFamilySpec,
                          tol: Tolerances = DEFAULT_TOL) -> dict:
    """Compare the copy family of a hole with the base family it rescales.

    ``family`` must join a generation-m hole C to the outer circle of its
    copy; ``base`` must join the corresponding inner circle M to O at level
    ``family.level - m + 1``.  Returns a report with the explicit cell and
    circle bijection verdict and both values.
    """
    cat = family.catalog
    if isinstance(family.c1, CopyBoundary) or (family.c1 == 0):
        raise InvalidPair("first endpoint of the copy family must be a hole")
    c = cat[family.c1]
    cp = subcarpet_map(cat, family.c1)
    if family.c2 != cp.outer:
        raise InvalidPair("second endpoint must be the outer circle of the hole's copy")
    want = family.level - c.generation + 1
    if base.level != want:
        raise LevelMismatch(f"base family must be at level {want}, got {base.level}")
    if base.spec != family.spec or base.corner_touch != family.corner_touch:
        raise LevelMismatch("base family describes a different carpet or touch rule")
    bcat = base.catalog
    if base.c2 != 0 or bcat.inner_circles()[c.slot] != base.c1:
        raise InvalidPair("base family must join the matching inner circle to O")

    corr = cp.correspondence(cat, bcat)
    inst_a, inst_b = compile_family(family), compile_family(base)
    ok = instances_isomorphic(inst_a, inst_b)
    mapped = [corr[x] for x in inst_b.circles]
    circles_ok = mapped == list(inst_a.circles)
    # cell bijection: translate base cells into the copy
    s = family.spec.base ** (family.level - cp.level)
    ox, oy = cp.cell[0] * s, cp.cell[1] * s
    cells_ok = all(
        (na == nb if not isinstance(nb, tuple) else na == (nb[0] + ox, nb[1] + oy))
        for na, nb in zip(inst_a.nodes, inst_b.nodes))
    ra, rb = _solve(inst_a, tol), _solve(inst_b, tol)
    return {
        "isomorphic": bool(ok and circles_ok and cells_ok),
        "value_copy": ra.value,
        "value_base": rb.value,
        "equal": ra.value == rb.value,
        "nodes": inst_a.problem.n_nodes,
        "circles": len(inst_a.circles),
    }


# ---------------------------------------------------------------------------
# Pair helpers


def nonadjacent_pairs(catalog: CircleCatalog, max_generation: int) -> list[tuple[int, int]]:
    ids = [c.id for c in catalog if c.generation <= max_generation]
    out = []
    for a_i, a in enumerate(ids):
        for b in ids[a_i + 1:]:
            if classify_pair(catalog, a, b) is Adjacency.NONADJACENT:
                out.append((a, b))
    return out


def pair_orbit_representatives(catalog: CircleCatalog, pairs: Iterable[tuple[int, int]]):
    """Group unordered pairs into dihedral orbits.

    Returns ``{representative: [members]}`` with the lexicographically least
    pair of each orbit as representative.
    """
    from .symmetry import circle_permutation
    perms = [circle_permutation(g, catalog) for g in dihedral_group()]
    pairs = [tuple(sorted(p)) for p in pairs]
    wanted = set(pairs)
    out: dict[tuple[int, int], list[tuple[int, int]]] = {}
    done = set()
    for p in sorted(pairs):
        if p in done:
            continue
        orbit = sorted({tuple(sorted((perm[p[0]], perm[p[1]]))) for perm in perms})
        members = [q for q in orbit if q in wanted]
        done.update(orbit)
        out[orbit[0] if orbit[0] in wanted else members[0]] = members
    return out
