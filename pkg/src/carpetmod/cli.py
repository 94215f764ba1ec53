"""``cml``: command-line front end with a content-addressed result cache.

Exit codes: 0 success, 2 usage or validation error, 3 solver or experiment
failure, 4 budget exceeded.  Failures print a JSON error payload on stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .cache import ResultCache, cache_key
from .carpet import (Adjacency, CarpetSpec, catalog_json, circle_catalog, classify_pair, generate)
from .carpet_modulus import (GROUP_PRESETS, GroupQuotientSpec, PathFamilySpec,
                             brute_force_carpet_modulus, carpet_modulus, group_carpet_modulus)
from .errors import (AssertionFailed, BudgetExceeded, ConstraintViolation,
                     InvalidPair, LevelMismatch, NotAHole, SolverError, TieAmbiguity,
                     UnmappedCircle)
from .grid_modulus import DEFAULT_TOL, Tolerances

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_BUDGET = 0, 2, 3, 4
DEFAULT_SEED = 20240917


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def parse_spec(text: str) -> CarpetSpec:
    """``fnp:5:1``, ``fnpr:7:1:2`` or ``sm:3``."""
    parts = text.split(":")
    try:
        fam, nums = parts[0], [int(x) for x in parts[1:]]
        if fam == "fnp" and len(nums) == 2:
            return CarpetSpec.fnp(*nums)
        if fam == "fnpr" and len(nums) == 3:
            return CarpetSpec.fnpr(*nums)
        if fam == "sm" and len(nums) == 1:
            return CarpetSpec.sm(*nums)
    except ValueError as exc:
        if isinstance(exc, ConstraintViolation):
            raise
        raise UsageError(f"bad carpet spec {text!r}") from exc
    raise UsageError(f"bad carpet spec {text!r}; use fnp:N:P, fnpr:N:P:R or sm:M")


def spec_from_flags(family, n, p, r, m) -> CarpetSpec:
    if family is None:
        raise UsageError("--family is required")
    if family == "sm":
        if m is None:
            raise UsageError("--m is required for sm")
        return CarpetSpec.sm(m)
    if n is None or p is None:
        raise UsageError(f"--n and --p are required for {family}")
    if family == "fnp":
        return CarpetSpec.fnp(n, p)
    return CarpetSpec.fnpr(n, p, 1 if r is None else r)


def _add_spec_flags(p: argparse.ArgumentParser):
    p.add_argument("--family", choices=["fnp", "fnpr", "sm"])
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--m", type=int)


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _tol(args, base: dict | None = None) -> Tolerances:
    """Default tolerances, overridden by a config block, overridden by flags."""
    t = {**DEFAULT_TOL.to_dict(), **(base or {})}
    for key, flag in (("feas", "tol_feas"), ("obj", "tol_obj"), ("max_sweeps", "max_sweeps")):
        if getattr(args, flag, None) is not None:
            t[key] = getattr(args, flag)
    return Tolerances(**t)


def _emit(obj, out: str | None = None) -> bytes:
    data = (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode() if not isinstance(obj, bytes) else obj
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)
    sys.stdout.buffer.write(data)
    sys.stdout.flush()
    return data


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    from .experiments import render
    spec = spec_from_flags(args.family, args.n, args.p, args.r, args.m)
    grid = generate(spec, args.level)
    cat = circle_catalog(spec, args.level)
    summary = {"spec": spec.to_dict(), "level": args.level, "cells": grid.count,
               "circles": len(cat), "dimension": spec.dimension}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "grid.json").write_text(json.dumps(grid.to_json(), sort_keys=True) + "\n")
        (out / "catalog.json").write_text(catalog_json(cat) + "\n")
        (out / "carpet.svg").write_text(render(grid, cat, title=spec.label))
        summary["files"] = ["grid.json", "catalog.json", "carpet.svg"]
    _emit(summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# modulus


def cmd_modulus(args) -> int:
    spec = spec_from_flags(args.family, args.n, args.p, args.r, args.m)
    if args.level is None:
        raise UsageError("--level is required")
    cat = circle_catalog(spec, args.level)
    try:
        a, b = (cat.resolve(t) for t in args.pair.split(","))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad --pair {args.pair!r}: {exc}") from exc
    kind = classify_pair(cat, a, b)
    if kind is Adjacency.ADJACENT:
        print(f"warning: {cat.name(a)} and {cat.name(b)} are adjacent; exploratory only",
              file=sys.stderr)
    family = PathFamilySpec(spec, args.level, a, b, args.corner_touch).validate()
    tol = _tol(args)
    method = "brute-force" if args.brute_force else (f"group:{args.group}" if args.group else "cg")
    key = cache_key({"kind": "modulus", "method": method, **family.key(), "tol": tol.to_dict()})
    cache = None if args.no_cache else ResultCache(args.cache)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            _emit(hit, args.out)
            return EXIT_OK
    if args.brute_force:
        rep = brute_force_carpet_modulus(family, tol=tol)
    elif args.group:
        q = GroupQuotientSpec.build(cat, GROUP_PRESETS[args.group])
        rep = group_carpet_modulus(family, q, tol)
    else:
        rep = carpet_modulus(family, tol)
    doc = rep.to_json()
    doc["method"] = method
    if kind is Adjacency.ADJACENT:
        doc.setdefault("flags", []).append("adjacent-pair")
    data = (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode()
    if cache is not None:
        data = cache.put(key, data)
    _emit(data, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiments


def _maximizer_svg(rep, tol, cache) -> str:
    """Carpet figure shaded by the extremal weights of the first maximizing pair."""
    from . import experiments as ex
    cat = circle_catalog(rep.spec, rep.level)
    rho, title = None, rep.spec.label
    if rep.maximizers:
        a, b = rep.maximizers[0]
        fam = PathFamilySpec(rep.spec, rep.level, a, b, rep.corner_touch)
        (doc,) = ex.solve_families([fam], tol, cache)
        if "rho" in doc:
            rho = {r["circle_id"]: r["weight"] for r in doc["rho"]}
            title = f"{rep.spec.label}, extremal weights for ({cat.name(a)}, {cat.name(b)})"
    return ex.render(generate(rep.spec, rep.level), cat, rho=rho, title=title)


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _merged(args, cfg: dict, name: str, default=None):
    """Flag value if given, else the config value, else ``default``."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def _specs(args, cfg) -> list[CarpetSpec]:
    if args.spec:
        return [parse_spec(s) for s in args.spec]
    if args.family:
        return [spec_from_flags(args.family, args.n, args.p, args.r, args.m)]
    if "specs" in cfg:
        return [s if isinstance(s, CarpetSpec) else
                (parse_spec(s) if isinstance(s, str) else CarpetSpec.from_dict(s))
                for s in cfg["specs"]]
    if args.n is not None and args.p is not None:
        return [CarpetSpec.fnp(args.n, args.p)]
    raise UsageError("no carpet given; use --spec, --family or a config file")


def _levels(args, cfg, default) -> list[int]:
    if args.levels:
        return [int(x) for x in args.levels.split(",")]
    if args.level is not None:
        return [args.level]
    if "levels" in cfg:
        return [int(x) for x in cfg["levels"]]
    if "level" in cfg:
        return [int(cfg["level"])]
    return list(default)


def cmd_experiment(args) -> int:
    from . import experiments as ex
    cfg = _load_config(args.config)
    out = _merged(args, cfg, "out", None) or f"cml-out/{args.kind}"
    jobs = int(_merged(args, cfg, "jobs", 1))
    corner = _merged(args, cfg, "corner_touch", True)
    tol = _tol(args, cfg.get("tol"))
    cache = None if args.no_cache else ResultCache(args.cache)
    maxgen = int(_merged(args, cfg, "max_generation", 2))
    config_echo = {"kind": args.kind, "corner_touch": corner, "tol": tol.to_dict(),
                   "max_generation": maxgen, "code_version": __version__}

    if args.kind in ("interchange", "signature"):
        specs = _specs(args, cfg)
        levels = _levels(args, cfg, [2])
        config_echo.update(specs=[s.to_dict() for s in specs], levels=levels)
        if args.kind == "signature":
            rows, summaries, figs = [], [], {}
            for spec in specs:
                for k in levels:
                    rep = ex.maximizer_signature(spec, k, corner, tol, maxgen, cache=cache, jobs=jobs)
                    rows += rep.rows()
                    summaries.append(rep.summary())
                    figs[f"signature_{spec.slug}_k{k}"] = (lambda r: lambda p: ex.plot_signature(r, p))(rep)
            svg = _maximizer_svg(rep, tol, cache)
            summary = summaries[0] if len(summaries) == 1 else {"runs": summaries}
            ex.export("signature", summary, rows, out, svg, config_echo, figs)
            _emit(summary)
            return EXIT_OK
        conf = ex.ExperimentConfig(specs=specs, levels=levels, max_generation=maxgen,
                                   corner_touch=corner, tol=tol, jobs=jobs,
                                   pairs=cfg.get("pairs"), allow_adjacent=cfg.get("allow_adjacent", False))
        try:
            reps = ex.interchange_table(conf, cache=cache)
            status = EXIT_OK
        except AssertionFailed as exc:
            reps = [exc.report]
            status = EXIT_SOLVER
            config_echo["assertion"] = {"message": str(exc),
                                        "offending": [[list(p), v] for p, v in exc.offending]}
        rows = [r for rep in reps for r in rep.rows()]
        summary = {"runs": [rep.summary() for rep in reps],
                   "passed": status == EXIT_OK}
        figs = {f"interchange_{r.spec.slug}_k{r.level}": (lambda rr: lambda p: ex.plot_signature(rr, p))(r)
                for r in reps}
        svg = _maximizer_svg(reps[0], tol, cache)
        ex.export("interchange", summary, rows, out, svg, config_echo, figs)
        _emit(summary)
        return status

    if args.kind == "fingerprint":
        specs = _specs(args, cfg)
        if len(specs) != 2:
            raise UsageError("fingerprint needs exactly two carpets (--spec A --spec B)")
        k = _levels(args, cfg, [2])[0]
        rep = ex.fingerprint_compare(specs[0], specs[1], k, corner_touch=corner, tol=tol,
                                     max_generation=maxgen, cache=cache, jobs=jobs)
        summary = rep.summary()
        ex.export("fingerprint", summary, rep.comparison(), out, None, config_echo,
                  {"fingerprint": lambda p: ex.plot_fingerprint(rep, p)})
        _emit(summary)
        return EXIT_OK

    if args.kind == "convergence":
        spec = _specs(args, cfg)[0]
        pair = (args.pair or cfg.get("pair") or "O,M1")
        pair = tuple(pair.split(",")) if isinstance(pair, str) else tuple(pair)
        levels = _levels(args, cfg, [1, 2])
        rep = ex.convergence_study(spec, pair, levels, corner, tol, cache, jobs)
        summary = rep.summary()
        ex.export("convergence", summary, rep.rows(), out, None, config_echo,
                  {"convergence": lambda p: ex.plot_convergence(rep, p)})
        _emit(summary)
        return EXIT_OK

    if args.kind == "tangent":
        from . import tangent as tg
        spec = _specs(args, cfg)[0]
        depth = int(_merged(args, cfg, "depth", 2))
        w = int(_merged(args, cfg, "window", 1))
        seed = int(_merged(args, cfg, "seed", DEFAULT_SEED))
        sdepth = int(_merged(args, cfg, "sample_depth", depth))
        origin = tg.build_window(spec, w, depth, "origin")
        corner_w = tg.build_window(spec, w, depth, "corner")
        pm = tg.projection_mass(origin)
        adm = tg.admissibility_sample(origin, seed=seed, depth=sdepth)
        tr = tg.third_transfer(origin, corner_w, sample=False)
        summary = {k: v for k, v in pm.to_json().items() if k != "circles"}
        summary["admissibility"] = adm.to_json()
        summary["third_transfer"] = tr.to_json()
        summary["seed"] = seed
        rows = [{"x": c["anchor"][0], "y": c["anchor"][1], "side": c["side"],
                 "generation": c["generation"], "theta": c["theta"], "rho": c["rho"]}
                for c in pm.to_json()["circles"]]
        config_echo.update(spec=spec.to_dict(), depth=depth, window=w, seed=seed, sample_depth=sdepth)
        ex.export("tangent", summary, rows, out, None, config_echo,
                  {"tangent": lambda p: ex.plot_tangent(pm, p)})
        _emit(summary)
        return EXIT_OK

    raise UsageError(f"unknown experiment {args.kind!r}")


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cml", description="Square carpets and their discrete carpet modulus.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--cache", help="cache directory (default $CML_CACHE or ./.cml-cache)")
        p.add_argument("--no-cache", action="store_true")
        p.add_argument("--tol-feas", type=float)
        p.add_argument("--tol-obj", type=float)
        p.add_argument("--max-sweeps", type=int)
        p.add_argument("--seed", type=int, help=f"path-sampling seed (default {DEFAULT_SEED})")

    g = sub.add_parser("gen", help="generate a carpet: grid, catalog and SVG")
    _add_spec_flags(g)
    g.add_argument("--level", type=int, required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("modulus", help="carpet modulus of one pair of circles")
    _add_spec_flags(m)
    common(m)
    m.add_argument("--level", type=int)
    m.add_argument("--pair", required=True, help="two circle names or ids, e.g. O,M1")
    m.add_argument("--group", choices=sorted(GROUP_PRESETS))
    m.add_argument("--corner-touch", type=_onoff, default=True, metavar="on|off")
    m.add_argument("--brute-force", action="store_true")
    m.add_argument("--out")
    m.set_defaults(func=cmd_modulus)

    e = sub.add_parser("experiment", help="run an experiment and write report.json, table.csv, figures")
    e.add_argument("kind", choices=["interchange", "signature", "fingerprint", "convergence", "tangent"])
    _add_spec_flags(e)
    common(e)
    e.add_argument("--spec", action="append", help="carpet as fnp:N:P, fnpr:N:P:R or sm:M")
    e.add_argument("--config")
    e.add_argument("--level", type=int)
    e.add_argument("--levels", help="comma-separated levels")
    e.add_argument("--pair")
    e.add_argument("--depth", type=int)
    e.add_argument("--window", type=int)
    e.add_argument("--sample-depth", type=int, dest="sample_depth")
    e.add_argument("--max-generation", type=int, dest="max_generation")
    e.add_argument("--corner-touch", type=_onoff, dest="corner_touch", metavar="on|off")
    e.add_argument("--jobs", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_experiment)
    return ap


def _fail(code: int, exc: BaseException) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    extra = getattr(exc, "values", None) or getattr(exc, "offending", None)
    if extra:
        payload["error"]["details"] = extra if isinstance(extra, dict) else [
            [list(p), v] for p, v in extra]
    sys.stdout.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        return _fail(EXIT_BUDGET, exc)
    except (UsageError, ConstraintViolation, InvalidPair, LevelMismatch, NotAHole) as exc:
        return _fail(EXIT_USAGE, exc)
    except (SolverError, TieAmbiguity, AssertionFailed, UnmappedCircle) as exc:
        return _fail(EXIT_SOLVER, exc)
    except (KeyError, ValueError) as exc:
        return _fail(EXIT_USAGE, exc)


if __name__ == "__main__":
    sys.exit(main())
