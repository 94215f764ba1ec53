"""Rigidity experiments: modulus tables, maximizer signatures, fingerprints,
convergence sequences, and their figures and tables.

Pair solves are independent.  By default one pair per dihedral orbit is
solved and its value is copied to the rest of the orbit; ``per_pair=True``
solves every pair directly.  Solves go through an optional
:class:`~carpetmod.cache.ResultCache` and, with ``jobs > 1``, a process pool.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence
from xml.etree import ElementTree

from .cache import ResultCache, cache_key
from .carpet import (Adjacency, CarpetSpec, CellGrid, CircleCatalog,
                     circle_catalog, classify_pair)
from .carpet_modulus import (PathFamilySpec, carpet_modulus, copy_family, nonadjacent_pairs,
                             pair_orbit_representatives)
from .errors import AssertionFailed, SolverError, TieAmbiguity
from .grid_modulus import DEFAULT_TOL, Tolerances, decode_value, encode_value
from .symmetry import dihedral_group, orbits

TIE_TOL = 1e-6
SCHEMA = "exp-report/1"


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class ExperimentConfig:
    specs: list[CarpetSpec]
    levels: list[int] = field(default_factory=lambda: [2])
    max_generation: int = 2
    pairs: list[tuple[int, int]] | None = None
    allow_adjacent: bool = False
    corner_touch: bool = True
    tol: Tolerances = DEFAULT_TOL
    out: str | None = None
    jobs: int = 1
    per_pair: bool = False

    def to_dict(self) -> dict:
        return {
            "specs": [s.to_dict() for s in self.specs],
            "levels": list(self.levels),
            "max_generation": self.max_generation,
            "pairs": None if self.pairs is None else [list(p) for p in self.pairs],
            "allow_adjacent": self.allow_adjacent,
            "corner_touch": self.corner_touch,
            "tol": self.tol.to_dict(),
            "per_pair": self.per_pair,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        tol = Tolerances(**d["tol"]) if "tol" in d else DEFAULT_TOL
        pairs = d.get("pairs")
        return cls(
            specs=[CarpetSpec.from_dict(s) for s in d["specs"]],
            levels=list(d.get("levels", [2])),
            max_generation=int(d.get("max_generation", 2)),
            pairs=None if pairs is None else [tuple(p) for p in pairs],
            allow_adjacent=bool(d.get("allow_adjacent", False)),
            corner_touch=bool(d.get("corner_touch", True)),
            tol=tol,
            out=d.get("out"),
            jobs=int(d.get("jobs", 1)),
            per_pair=bool(d.get("per_pair", False)),
        )

    def select_pairs(self, catalog: CircleCatalog) -> list[tuple[int, int]]:
        if self.pairs is None:
            return nonadjacent_pairs(catalog, self.max_generation)
        out = []
        for a, b in self.pairs:
            a, b = catalog.resolve(a), catalog.resolve(b)
            kind = classify_pair(catalog, a, b)
            if kind is not Adjacency.NONADJACENT and not self.allow_adjacent:
                raise ValueError(f"pair ({a}, {b}) is {kind.value}; set allow_adjacent for exploratory runs")
            out.append((min(a, b), max(a, b)))
        return out


# ---------------------------------------------------------------------------
# Solving pairs


@dataclass(frozen=True)
class PairValue:
    pair: tuple
    value: float
    status: str
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("ok", "infeasible")


def family_cache_key(family: PathFamilySpec, tol: Tolerances) -> str:
    return cache_key({"kind": "carpet_modulus", **family.key(), "tol": tol.to_dict()})


def _solve_family_json(family: PathFamilySpec, tol: Tolerances) -> bytes:
    """Serialized report of one solve; solver failures become error payloads."""
    try:
        rep = carpet_modulus(family, tol).to_json()
    except SolverError as exc:
        r = exc.report
        rep = {"schema": "cm-report/1", **family.key(),
               "status": getattr(r, "status", None) or type(exc).__name__.lower(),
               "value": encode_value(getattr(r, "value", math.inf) if r is not None else math.inf),
               "error": {"type": type(exc).__name__, "message": str(exc)}}
    return json.dumps(rep, sort_keys=True, indent=1).encode()


def _worker(args):
    family, tol = args
    return _solve_family_json(family, tol)


def solve_families(families: Sequence[PathFamilySpec], tol: Tolerances = DEFAULT_TOL,
                   cache: ResultCache | None = None, jobs: int = 1) -> list[dict]:
    """Solve each family (through the cache) and return the parsed reports in order."""
    out: list[bytes | None] = [None] * len(families)
    todo = []
    for k, fam in enumerate(families):
        if cache is not None:
            hit = cache.get(family_cache_key(fam, tol))
            if hit is not None:
                out[k] = hit
                continue
        todo.append(k)
    args = [(families[k], tol) for k in todo]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, args, chunksize=max(1, len(args) // (4 * jobs))))
    else:
        results = [_worker(a) for a in args]
    for k, data in zip(todo, results):
        if cache is not None:
            data = cache.put(family_cache_key(families[k], tol), data)
        out[k] = data
    return [json.loads(b) for b in out]


def _pair_value(pair, rep: dict) -> PairValue:
    err = rep.get("error")
    return PairValue(pair, decode_value(rep["value"]), rep["status"], err["message"] if err else "")


def solve_pairs(spec: CarpetSpec, level: int, pairs: Iterable[tuple[int, int]],
                corner_touch: bool = True, tol: Tolerances = DEFAULT_TOL,
                cache: ResultCache | None = None, jobs: int = 1,
                per_pair: bool = False) -> dict[tuple[int, int], PairValue]:
    cat = circle_catalog(spec, level)
    pairs = sorted({tuple(sorted(p)) for p in pairs})
    if per_pair:
        groups = {p: [p] for p in pairs}
    else:
        groups = pair_orbit_representatives(cat, pairs)
    reps = sorted(groups)
    fams = [PathFamilySpec(spec, level, a, b, corner_touch) for a, b in reps]
    reports = solve_families(fams, tol, cache, jobs)
    out = {}
    for rep_pair, rep in zip(reps, reports):
        for member in groups[rep_pair]:
            out[member] = replace(_pair_value(rep_pair, rep), pair=member)
    return dict(sorted(out.items()))


def pair_orbit_index(catalog: CircleCatalog, pairs) -> dict[tuple[int, int], tuple[int, int]]:
    return {m: rep for rep, members in pair_orbit_representatives(catalog, pairs).items()
            for m in members}


# ---------------------------------------------------------------------------
# Signatures


@dataclass
class SignatureReport:
    spec: CarpetSpec
    level: int
    corner_touch: bool
    values: dict[tuple[int, int], PairValue]
    maximum: float
    maximizers: list[tuple[int, int]]
    runner_up: float | None
    margin: float | None
    tie_tol: float = TIE_TOL
    chain: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def multiplicity(self) -> int:
        return len(self.maximizers)

    @property
    def relative_margin(self) -> float | None:
        if self.margin is None or not math.isfinite(self.maximum) or self.maximum == 0:
            return None
        return self.margin / abs(self.maximum)

    def summary(self) -> dict:
        cat = circle_catalog(self.spec, self.level)
        return {
            "spec": self.spec.to_dict(),
            "level": self.level,
            "corner_touch": self.corner_touch,
            "n_pairs": len(self.values),
            "maximum": encode_value(self.maximum),
            "maximizers": [[cat.name(a), cat.name(b)] for a, b in self.maximizers],
            "multiplicity": self.multiplicity,
            "runner_up": None if self.runner_up is None else encode_value(self.runner_up),
            "margin": None if self.margin is None else encode_value(self.margin),
            "relative_margin": self.relative_margin,
            "tie_tol": self.tie_tol,
            "failed_rows": sum(1 for v in self.values.values() if not v.ok),
            "chain_violations": [r for r in self.chain if not r["ok"]],
            "notes": list(self.notes),
        }

    def rows(self) -> list[dict]:
        cat = circle_catalog(self.spec, self.level)
        chain = {tuple(r["pair"]): r for r in self.chain}
        out = []
        for (a, b), pv in self.values.items():
            row = {
                "spec": self.spec.slug, "level": self.level,
                "c1": a, "c2": b, "name1": cat.name(a), "name2": cat.name(b),
                "gen1": cat[a].generation, "gen2": cat[b].generation,
                "value": encode_value(pv.value), "status": pv.status,
                "maximizer": (a, b) in self.maximizers,
            }
            if chain:
                c = chain.get((a, b))
                row["chain_bound"] = None if c is None else encode_value(c["bound"])
                row["chain_ok"] = None if c is None else c["ok"]
            out.append(row)
        return out


def _signature(spec, level, values, corner_touch, tie_tol) -> SignatureReport:
    """Maximum, its tie set, and the margin to the best pair outside it.

    A tie set spanning two or more dihedral orbits of pairs cannot be a
    symmetry artefact and raises :class:`TieAmbiguity`.
    """
    good = {p: v.value for p, v in values.items() if v.ok}
    if not good:
        raise SolverError("no pair solved successfully")
    top = max(good.values())
    if math.isinf(top):
        tied = [p for p, v in good.items() if math.isinf(v)]
    else:
        tied = [p for p, v in good.items() if v >= top - tie_tol * abs(top)]
    rest = [v for p, v in good.items() if p not in tied]
    runner = max(rest) if rest else None
    margin = None if runner is None else top - runner
    cat = circle_catalog(spec, level)
    orbit_of = pair_orbit_index(cat, list(values))
    tie_orbits = sorted({orbit_of[p] for p in tied})
    if len(tie_orbits) > 1:
        vals = {f"{cat.name(a)},{cat.name(b)}": good[(a, b)] for a, b in sorted(tied)}
        raise TieAmbiguity(
            f"{len(tied)} pairs from {len(tie_orbits)} distinct orbits tie at the maximum "
            f"{top!r} within relative {tie_tol:g}", values=vals)
    return SignatureReport(spec, level, corner_touch, values, top, sorted(tied), runner, margin,
                           tie_tol)


def maximizer_signature(spec: CarpetSpec, k: int, corner_touch: bool = True,
                        tol: Tolerances = DEFAULT_TOL, max_generation: int = 2,
                        tie_tol: float = TIE_TOL, cache: ResultCache | None = None,
                        jobs: int = 1, per_pair: bool = False) -> SignatureReport:
    cat = circle_catalog(spec, k)
    pairs = nonadjacent_pairs(cat, max_generation)
    values = solve_pairs(spec, k, pairs, corner_touch, tol, cache, jobs, per_pair)
    return _signature(spec, k, values, corner_touch, tie_tol)


def expected_maximizers(catalog: CircleCatalog) -> list[tuple[int, int]]:
    return sorted((0, m) for m in catalog.inner_circles())


def chain_partner(catalog: CircleCatalog, a: int, b: int) -> list[int]:
    """Endpoints ``C`` of the pair that may play the smaller circle in the chain bound."""
    ga, gb = catalog[a].generation, catalog[b].generation
    if ga == gb:
        return [a, b]
    return [a if ga > gb else b]


def chain_bounds(spec: CarpetSpec, level: int, values: dict, corner_touch: bool,
                 tol: Tolerances, cache=None, jobs: int = 1) -> list[dict]:
    """Row-wise check of mod(C, C') <= mod(C, C0), C0 the outer circle of C's copy."""
    cat = circle_catalog(spec, level)
    smaller = {p: chain_partner(cat, *p) for p in values}
    holes = sorted({c for cs in smaller.values() for c in cs})
    circle_orbit = {c: min(o) for o in orbits(cat, dihedral_group()) for c in o}
    reps = sorted({circle_orbit[c] for c in holes})
    fams = [copy_family(cat, c, corner_touch) for c in reps]
    reports = solve_families(fams, tol, cache, jobs)
    bound_of_rep = {c: decode_value(r["value"]) for c, r in zip(reps, reports)}
    rows = []
    for p, pv in values.items():
        if not pv.ok:
            continue
        best = min(bound_of_rep[circle_orbit[c]] for c in smaller[p])
        slack = 1e-9 * max(1.0, abs(best)) if math.isfinite(best) else 0.0
        rows.append({"pair": list(p), "value": pv.value, "bound": best,
                     "C": smaller[p], "ok": bool(pv.value <= best + slack)})
    return rows


def interchange_table(config: ExperimentConfig, cache: ResultCache | None = None,
                      check_chain: bool = True) -> list[SignatureReport]:
    """Modulus table per (spec, level) with the strict-maximum assertion.

    Raises :class:`AssertionFailed` listing every pair whose value reaches
    the smallest value among the pairs (O, M_i); the failing table is
    attached as ``exc.report``.
    """
    reports = []
    for spec in config.specs:
        for level in config.levels:
            cat = circle_catalog(spec, level)
            pairs = config.select_pairs(cat)
            values = solve_pairs(spec, level, pairs, config.corner_touch, config.tol, cache,
                                 config.jobs, config.per_pair)
            expected = [p for p in expected_maximizers(cat) if p in values]
            try:
                rep = _signature(spec, level, values, config.corner_touch, TIE_TOL)
            except TieAmbiguity as exc:
                rep = SignatureReport(spec, level, config.corner_touch, values,
                                      max(v.value for v in values.values()), [], None, None)
                rep.notes.append(f"tie ambiguity: {exc}")
            if check_chain:
                rep.chain = chain_bounds(spec, level, values, config.corner_touch, config.tol,
                                         cache, config.jobs)
            reports.append(rep)
            if expected:
                floor = min(values[p].value for p in expected)
                offending = [(p, values[p].value) for p in values
                             if p not in expected and values[p].ok and values[p].value >= floor]
                if offending:
                    exc = AssertionFailed(
                        f"{len(offending)} pairs reach mod(O, M_i) = {floor!r} on {spec.label} "
                        f"at level {level}", offending=offending)
                    exc.report = rep
                    raise exc
                others = [v.value for p, v in values.items() if p not in expected and v.ok]
                rep.notes.append(f"(O, M_i) margin over the other pairs: "
                                 f"{floor - max(others) if others else math.inf!r}")
    return reports


# ---------------------------------------------------------------------------
# Fingerprints and convergence


@dataclass
class FingerprintReport:
    spec_a: CarpetSpec
    spec_b: CarpetSpec
    level: int
    a: dict
    b: dict
    rel_tol: float = 1e-9
    label: str = "experimental discriminator"

    def comparison(self) -> list[dict]:
        rows = []
        for key in sorted(set(self.a) | set(self.b)):
            va, vb = self.a.get(key), self.b.get(key)
            if isinstance(va, (int, float)) and isinstance(vb, (int, float)):
                diff = abs(va - vb)
                equal = diff <= self.rel_tol * max(1.0, abs(va), abs(vb))
            else:
                diff, equal = None, va == vb
            rows.append({"observable": key, "a": va, "b": vb, "abs_diff": diff, "equal": equal})
        return rows

    @property
    def identical(self) -> bool:
        return all(r["equal"] for r in self.comparison())

    def summary(self) -> dict:
        return {"label": self.label, "spec_a": self.spec_a.to_dict(),
                "spec_b": self.spec_b.to_dict(), "level": self.level,
                "identical": self.identical,
                "distinct_observables": [r["observable"] for r in self.comparison() if not r["equal"]]}


def fingerprint(spec: CarpetSpec, k: int, corner_touch: bool = True, tol: Tolerances = DEFAULT_TOL,
                max_generation: int = 2, top: int = 4, cache=None, jobs: int = 1) -> dict:
    """Scale-free observables of one carpet at level ``k``."""
    cat = circle_catalog(spec, k)
    obs: dict = {"dimension": spec.dimension, "catalog_size": len(cat)}
    for g in range(1, k + 1):
        obs[f"holes_gen{g}"] = len(cat.holes(g))
    values = solve_pairs(spec, k, nonadjacent_pairs(cat, max_generation), corner_touch, tol,
                         cache, jobs)
    finite = sorted({round(v.value, 12) for v in values.values() if v.ok and math.isfinite(v.value)},
                    reverse=True)
    if finite:
        obs["max_value"] = finite[0]
        for j, v in enumerate(finite[1:top + 1], start=2):
            obs[f"ratio_{j}"] = v / finite[0]
    obs["infinite_pairs"] = sum(1 for v in values.values() if math.isinf(v.value))
    return obs


def fingerprint_compare(spec_a: CarpetSpec, spec_b: CarpetSpec, k: int, **kw) -> FingerprintReport:
    fa = fingerprint(spec_a, k, **kw)
    fb = fa if spec_b == spec_a else fingerprint(spec_b, k, **kw)
    return FingerprintReport(spec_a, spec_b, k, fa, dict(fb))


@dataclass
class ConvergenceReport:
    spec: CarpetSpec
    pair: tuple
    levels: list[int]
    values: list[PairValue]

    @property
    def diffs(self) -> list[float | None]:
        out = []
        for u, v in zip(self.values, self.values[1:]):
            if u.ok and v.ok and math.isfinite(u.value) and math.isfinite(v.value):
                out.append(abs(v.value - u.value))
            else:
                out.append(None)
        return out

    def rows(self) -> list[dict]:
        d = [None] + self.diffs
        return [{"level": k, "value": encode_value(v.value), "status": v.status, "diff": dd}
                for k, v, dd in zip(self.levels, self.values, d)]

    def summary(self) -> dict:
        return {"spec": self.spec.to_dict(), "pair": list(self.pair), "levels": self.levels,
                "values": [encode_value(v.value) for v in self.values], "diffs": self.diffs}


def convergence_study(spec: CarpetSpec, pair: tuple, k_range: Iterable[int],
                      corner_touch: bool = True, tol: Tolerances = DEFAULT_TOL,
                      cache=None, jobs: int = 1) -> ConvergenceReport:
    """Values of one pair across levels.  ``pair`` uses circle names or ids."""
    levels = list(k_range)
    fams = []
    for k in levels:
        cat = circle_catalog(spec, k)
        fams.append(PathFamilySpec(spec, k, cat.resolve(pair[0]), cat.resolve(pair[1]),
                                   corner_touch))
    reports = solve_families(fams, tol, cache, jobs)
    vals = [_pair_value((f.c1, f.c2), r) for f, r in zip(fams, reports)]
    return ConvergenceReport(spec, tuple(pair), levels, vals)


# ---------------------------------------------------------------------------
# Rendering


_LOW, _HIGH = (0xf7, 0xfb, 0xff), (0x08, 0x30, 0x6b)


def _heat(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    rgb = [round(a + (b - a) * t) for a, b in zip(_LOW, _HIGH)]
    return "#%02x%02x%02x" % tuple(rgb)


def _hole_rect(circle, spec: CarpetSpec, level: int) -> tuple[int, int, int]:
    """``(x, y, w)`` of a hole in level-``level`` cell units, y pointing down."""
    N = spec.base ** level
    s = spec.base ** (level - circle.generation)
    w = spec.hole_side * s
    x0, y0 = circle.cell[0] * s, circle.cell[1] * s
    return x0, N - y0 - w, w


def render(grid: CellGrid, catalog: CircleCatalog, rho: dict[int, float] | None = None,
           title: str | None = None, px: int = 540) -> str:
    """Deterministic SVG of the carpet at the grid's level.

    Coordinates are integer cell units, so every hole rectangle is exact.
    Holes carry ``id="c<id>"`` and ``data-gen``; with ``rho`` they are
    filled by weight and a legend is added.
    """
    spec, level = grid.spec, grid.level
    N = spec.base ** level
    legend = rho is not None
    pad = max(1, N // 40)
    width = N + 2 * pad + (N // 5 + 2 * pad if legend else 0)
    height = N + 2 * pad + (N // 12 + pad if title else 0)
    top = N // 12 + pad if title else 0
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{px * width // (N + 2 * pad)}" '
        f'height="{px * height // (N + 2 * pad)}" viewBox="{-pad} {-pad - top} {width} {height}">',
        f'<rect id="background" x="{-pad}" y="{-pad - top}" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        lines.append(f'<text x="{N / 2:g}" y="{-pad - top / 2:g}" font-size="{max(N // 20, 1)}" '
                     f'text-anchor="middle" dominant-baseline="middle" font-family="sans-serif">'
                     f'{title}</text>')
    lines.append(f'<rect id="c0" data-gen="0" x="0" y="0" width="{N}" height="{N}" '
                 f'fill="#1a1a1a" stroke="#000000" stroke-width="{N / 200:g}"/>')
    vmax = max(rho.values(), default=0.0) if legend else 0.0
    lines.append('<g id="holes">')
    for c in catalog.holes():
        x, y, w = _hole_rect(c, spec, level)
        fill = "#ffffff"
        if legend:
            fill = _heat(rho.get(c.id, 0.0) / vmax if vmax > 0 else 0.0)
        lines.append(f'<rect id="c{c.id}" data-gen="{c.generation}" x="{x}" y="{y}" '
                     f'width="{w}" height="{w}" fill="{fill}"/>')
    lines.append('</g>')
    if legend:
        lx, lw = N + 2 * pad, max(N // 20, 1)
        steps = 10
        lines.append('<g id="legend">')
        for s in range(steps):
            h = N / steps
            lines.append(f'<rect x="{lx}" y="{N - (s + 1) * h:g}" width="{lw}" height="{h:g}" '
                         f'fill="{_heat((s + 0.5) / steps)}"/>')
        fs = max(N // 30, 1)
        lines.append(f'<text x="{lx + lw + pad}" y="{N}" font-size="{fs}" '
                     f'font-family="sans-serif">0</text>')
        lines.append(f'<text x="{lx + lw + pad}" y="{fs}" font-size="{fs}" '
                     f'font-family="sans-serif">{vmax:.4g}</text>')
        lines.append('</g>')
    lines.append('</svg>')
    return "\n".join(lines) + "\n"


def svg_holes(svg: str) -> dict[int, tuple[int, int, int]]:
    """Parse hole rectangles back out of :func:`render` output."""
    root = ElementTree.fromstring(svg.encode())
    ns = "{http://www.w3.org/2000/svg}"
    out = {}
    for el in root.iter(ns + "rect"):
        rid = el.get("id", "")
        if rid.startswith("c") and rid != "c0" and rid[1:].isdigit():
            out[int(rid[1:])] = (int(el.get("x")), int(el.get("y")), int(el.get("width")))
    return out


def verify_render(svg: str, catalog: CircleCatalog) -> list[int]:
    """Ids of holes whose rectangle is missing or misplaced (empty when the figure matches)."""
    drawn = svg_holes(svg)
    bad = [c.id for c in catalog.holes()
           if drawn.get(c.id) != _hole_rect(c, catalog.spec, catalog.level)]
    bad += [cid for cid in drawn if cid >= len(catalog)]
    return sorted(bad)


# ---------------------------------------------------------------------------
# Export


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields += [k for k in r if k not in fields]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, float):
        return encode_value(x) if math.isinf(x) else x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def export(kind: str, summary: dict, rows: list[dict], out: str | os.PathLike,
           svg: str | None = None, config: dict | None = None,
           figures: dict | None = None) -> dict[str, Path]:
    """Write ``report.json``, ``table.csv`` and optionally ``figure.svg`` and PNG figures."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"schema": SCHEMA, "experiment": kind, "summary": summary, "rows": rows}
    if config is not None:
        doc["config"] = config
    paths = {"report": out / "report.json", "table": out / "table.csv"}
    paths["report"].write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")
    paths["table"].write_text(_csv_text(_jsonable(rows)))
    if svg is not None:
        paths["svg"] = out / "figure.svg"
        paths["svg"].write_text(svg)
    for name, fn in (figures or {}).items():
        p = out / f"{name}.png"
        fn(p)
        paths[name] = p
    return paths


# matplotlib figures for the report path -------------------------------------


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams.update({"font.size": 8, "axes.labelsize": 9, "figure.dpi": 150,
                         "svg.hashsalt": "cml", "axes.spines.top": False,
                         "axes.spines.right": False})
    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    import matplotlib.pyplot as plt
    plt.close(fig)


def plot_signature(report: SignatureReport, path, top: int = 25):
    plt = _pyplot()
    cat = circle_catalog(report.spec, report.level)
    items = sorted(((v.value, p) for p, v in report.values.items()
                    if v.ok and math.isfinite(v.value)), reverse=True)[:top]
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    colors = ["#b2182b" if p in report.maximizers else "#4393c3" for _, p in items]
    ax.bar(range(len(items)), [v for v, _ in items], color=colors)
    ax.set_xticks(range(len(items)))
    ax.set_xticklabels([f"{cat.name(a)},{cat.name(b)}" for _, (a, b) in items],
                       rotation=90, fontsize=6)
    ax.set_ylabel("level-%d modulus" % report.level)
    ax.set_title(f"{report.spec.label}: largest pair values")
    _save(fig, path)


def plot_convergence(report: ConvergenceReport, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    pts = [(k, v.value) for k, v in zip(report.levels, report.values)
           if v.ok and math.isfinite(v.value)]
    if pts:
        ax.plot(*zip(*pts), marker="o", color="#2166ac")
    ax.set_xlabel("level k")
    ax.set_ylabel("modulus")
    ax.set_xticks(report.levels)
    ax.set_title(f"{report.spec.label}: {report.pair[0]}-{report.pair[1]}")
    _save(fig, path)


def plot_tangent(report, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.0, 3.2))
    sides = [float(h.side) for h in report.holes]
    ax.scatter(sides, report.theta, s=6, color="#2166ac", label=r"$\theta(C)$")
    xs = sorted(set(sides))
    ax.plot(xs, [report.K * x for x in xs], color="#b2182b", lw=1, label=r"$K\,\ell(C)$")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"side $\ell(C)$")
    ax.set_ylabel("shadow angle")
    ax.legend(frameon=False)
    _save(fig, path)


def plot_fingerprint(report: FingerprintReport, path):
    plt = _pyplot()
    keys = [k for k in sorted(report.a) if k.startswith("ratio_") or k == "dimension"]
    fig, ax = plt.subplots(figsize=(4.8, 3.0))
    x = range(len(keys))
    ax.bar([i - 0.2 for i in x], [report.a.get(k, 0) for k in keys], width=0.4,
           label=report.spec_a.label, color="#4393c3")
    ax.bar([i + 0.2 for i in x], [report.b.get(k, 0) for k in keys], width=0.4,
           label=report.spec_b.label, color="#d6604d")
    ax.set_xticks(list(x))
    ax.set_xticklabels(keys, rotation=30)
    ax.legend(frameon=False)
    ax.set_title(report.label)
    _save(fig, path)
