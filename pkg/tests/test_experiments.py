import json
import math

import pytest

from carpetmod.cache import ResultCache
from carpetmod.carpet import CarpetSpec, circle_catalog, generate
from carpetmod.errors import AssertionFailed, TieAmbiguity
from carpetmod.experiments import (ExperimentConfig, PairValue, _signature, chain_bounds,
                                   convergence_study, export, fingerprint_compare,
                                   interchange_table, maximizer_signature, pair_orbit_index,
                                   render, solve_pairs, svg_holes, verify_render)

F51 = CarpetSpec.fnp(5, 1)
S3 = CarpetSpec.sm(3)


def _values(assign):
    return {p: PairValue(p, v, "ok") for p, v in assign.items()}


def test_signature_single_orbit_tie_is_allowed():
    cat = circle_catalog(F51, 1)
    orbit = pair_orbit_index(cat, [(0, m) for m in range(1, 5)] + [(1, 4)])
    assert len(set(orbit.values())) == 2
    vals = _values({p: 2.0 for p in orbit if p[0] == 0} | {(1, 4): 1.0})
    rep = _signature(F51, 1, vals, True, 1e-6)
    assert rep.multiplicity == 4
    assert rep.margin == pytest.approx(1.0)


def test_signature_ties_across_orbits_raise():
    vals = _values({(0, 1): 2.0, (0, 2): 2.0, (0, 3): 2.0, (0, 4): 2.0,
                    (1, 3): 2.0, (2, 4): 2.0, (1, 4): 1.0})
    with pytest.raises(TieAmbiguity) as info:
        _signature(F51, 1, vals, True, 1e-6)
    assert len(info.value.values) == 6


def test_orbit_solving_matches_per_pair(tmp_path):
    cat = circle_catalog(F51, 2)
    pairs = [(0, m) for m in cat.inner_circles()] + [(1, 3), (2, 4)]
    a = solve_pairs(F51, 2, pairs)
    b = solve_pairs(F51, 2, pairs, per_pair=True)
    for p in a:
        assert a[p].value == pytest.approx(b[p].value, rel=1e-9)


def test_signature_s3_level_two_unique():
    rep = maximizer_signature(S3, 2)
    assert rep.multiplicity == 1
    assert rep.maximizers == [(0, 1)]
    assert rep.margin > 0


def test_interchange_assertion_and_chain_rows():
    cfg = ExperimentConfig([F51], levels=[2], max_generation=1)
    (rep,) = interchange_table(cfg)
    assert rep.multiplicity == 4
    assert any("margin" in n for n in rep.notes)
    assert all(r["ok"] for r in rep.chain)


def test_interchange_raises_when_outer_pairs_lose():
    # at level 1 the diagonal pair M1,M3 touches through shared cells and
    # beats (O, M1); it is only admitted in exploratory mode
    cfg = ExperimentConfig([F51], levels=[1], pairs=[("O", "M1"), ("M1", "M3")])
    with pytest.raises(ValueError):
        interchange_table(cfg, check_chain=False)
    cfg.allow_adjacent = True
    with pytest.raises(AssertionFailed) as info:
        interchange_table(cfg, check_chain=False)
    assert info.value.offending == [((1, 4), 3.0)]
    assert info.value.report.maximum == 3.0


def test_chain_bounds_rows_reference_copy_values():
    vals = solve_pairs(F51, 2, [(0, 16)])
    (row,) = chain_bounds(F51, 2, vals, True, ExperimentConfig([F51]).tol)
    assert row["C"] == [16]
    # at the hole's own generation the copy ring touches the hole region
    assert row["bound"] == pytest.approx(2.0, abs=1e-9)
    assert not row["ok"]


def test_convergence_single_level():
    rep = convergence_study(F51, ("O", "M1"), [1])
    assert rep.diffs == []
    assert rep.values[0].value == pytest.approx(2.0, abs=1e-9)
    two = convergence_study(F51, ("O", "M1"), [1, 2])
    assert two.diffs[0] == pytest.approx(abs(two.values[1].value - 2.0))


def test_fingerprint_self_comparison():
    rep = fingerprint_compare(F51, F51, 1)
    assert rep.identical
    assert rep.summary()["label"] == "experimental discriminator"
    other = fingerprint_compare(F51, CarpetSpec.fnp(7, 1), 1)
    assert not other.identical
    assert "dimension" in other.summary()["distinct_observables"]


@pytest.mark.parametrize("spec, k", [(S3, 2), (F51, 2), (CarpetSpec.fnpr(7, 1, 2), 1)])
def test_render_deterministic_and_verified(spec, k):
    grid, cat = generate(spec, k), circle_catalog(spec, k)
    a, b = render(grid, cat), render(grid, cat)
    assert a == b
    assert verify_render(a, cat) == []
    assert len(svg_holes(a)) == len(cat) - 1


def test_verify_render_detects_tampering():
    grid, cat = generate(S3, 1), circle_catalog(S3, 1)
    svg = render(grid, cat)
    moved = svg.replace('id="c1" data-gen="1" x="1"', 'id="c1" data-gen="1" x="2"')
    assert moved != svg
    assert verify_render(moved, cat) == [1]
    dropped = svg.replace('id="c1"', 'id="extra"')
    assert verify_render(dropped, cat) == [1]


def test_render_with_weights_has_legend():
    grid, cat = generate(F51, 1), circle_catalog(F51, 1)
    svg = render(grid, cat, rho={1: 0.5, 3: 1.0}, title="weights")
    assert "legend" in svg and verify_render(svg, cat) == []


def test_export_is_byte_identical(tmp_path):
    rows = [{"a": 1, "b": math.inf}, {"a": 2, "b": 0.5}]
    p1 = export("demo", {"x": 1}, rows, tmp_path / "one", svg="<svg/>")
    p2 = export("demo", {"x": 1}, rows, tmp_path / "two", svg="<svg/>")
    for key in ("report", "table", "svg"):
        assert p1[key].read_bytes() == p2[key].read_bytes()
    doc = json.loads(p1["report"].read_text())
    assert doc["schema"] == "exp-report/1"
    assert doc["rows"][0]["b"] == "+inf"


def test_cache_returns_identical_bytes(tmp_path):
    cache = ResultCache(tmp_path)
    a = solve_pairs(F51, 1, [(0, 1)], cache=cache)
    files = sorted(tmp_path.rglob("*.json"))
    assert len(files) == 1
    before = files[0].read_bytes()
    b = solve_pairs(F51, 1, [(0, 1)], cache=cache)
    assert a == b
    assert files[0].read_bytes() == before
