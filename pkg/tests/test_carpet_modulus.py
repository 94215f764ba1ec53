import math

import numpy as np
import pytest

from carpetmod.carpet import CarpetSpec, CopyBoundary, circle_catalog
from carpetmod.carpet_modulus import (GROUP_PRESETS, GroupQuotientSpec, PathFamilySpec,
                                      _touch_incidence, brute_force_carpet_modulus,
                                      carpet_modulus, compile_family, copy_family,
                                      group_carpet_modulus, nonadjacent_pairs,
                                      pair_orbit_representatives, self_similarity_check)
from carpetmod.errors import InvalidPair, LevelMismatch, NoPath
from carpetmod.symmetry import dihedral_group

F51 = CarpetSpec.fnp(5, 1)
S3 = CarpetSpec.sm(3)


def test_touch_rule_corner_switch():
    on = _touch_incidence(F51, 1, True)
    off = _touch_incidence(F51, 1, False)
    # cell (0,0) shares only a corner point with the hole M1 at (1,1)
    assert on.at(0, 0) == (0, 1)
    assert off.at(0, 0) == (0,)
    # a cell with a full edge on M1 touches it under both rules
    assert 1 in on.at(1, 0) and 1 in off.at(1, 0)


def test_level_one_value():
    rep = carpet_modulus(PathFamilySpec(F51, 1, 0, 1))
    assert rep.status == "ok"
    assert rep.value == pytest.approx(2.0, abs=1e-9)
    assert rep.rho[0] == 0.0 and rep.rho[1] == 0.0


def test_cg_agrees_with_brute_force():
    for spec, pair in ((F51, (1, 3)), (F51, (0, 1)), (S3, (0, 1))):
        fam = PathFamilySpec(spec, 1, *pair)
        try:
            cg = carpet_modulus(fam).value
        except NoPath:
            with pytest.raises(NoPath):
                brute_force_carpet_modulus(fam)
            continue
        assert brute_force_carpet_modulus(fam).value == pytest.approx(cg, abs=1e-8)


def test_swap_and_dihedral_invariance():
    cat = circle_catalog(F51, 2)
    fam = PathFamilySpec(F51, 2, 1, 3)
    v = carpet_modulus(fam).value
    assert carpet_modulus(fam.swapped()).value == pytest.approx(v, rel=1e-9)
    for g in dihedral_group():
        assert carpet_modulus(fam.mapped(g)).value == pytest.approx(v, rel=1e-9)
    assert len(cat) == 1 + 4 + 84


def test_outer_to_inner_equal_across_corners():
    vals = [carpet_modulus(PathFamilySpec(F51, 2, 0, m)).value
            for m in circle_catalog(F51, 2).inner_circles()]
    assert max(vals) - min(vals) <= 1e-12 * max(vals)


def test_warm_start_does_not_change_value():
    fam = PathFamilySpec(F51, 2, 1, 3)
    base = carpet_modulus(fam)
    rng = np.random.default_rng(3)
    start = {c: float(rng.uniform(0, 2)) for c in base.rho}
    warm = carpet_modulus(fam, start=start)
    assert warm.value == pytest.approx(base.value, rel=1e-6)


def test_free_endpoints_do_not_change_value():
    fam = PathFamilySpec(F51, 1, 0, 1)
    assert carpet_modulus(fam, fix_endpoints=False).value == pytest.approx(
        carpet_modulus(fam).value, abs=1e-9)


def test_invalid_families():
    with pytest.raises(InvalidPair):
        PathFamilySpec(F51, 1, 2, 2)
    with pytest.raises(InvalidPair):
        PathFamilySpec(F51, 1, 0, 9).validate()
    with pytest.raises(LevelMismatch):
        PathFamilySpec(F51, 1, 1, CopyBoundary(2, (0, 0)))
    # the single first generation hole of S_3 is disjoint from O
    PathFamilySpec(S3, 1, 0, 1).validate()


def test_copy_family_self_similarity():
    cat = circle_catalog(F51, 2)
    hole = cat.holes(2)[0]
    fam = copy_family(cat, hole.id)
    base = PathFamilySpec(F51, 1, circle_catalog(F51, 1).inner_circles()[hole.slot], 0)
    out = self_similarity_check(fam, base)
    assert out["isomorphic"]
    assert out["value_copy"] == out["value_base"]
    with pytest.raises(LevelMismatch):
        self_similarity_check(fam, PathFamilySpec(F51, 2, base.c1, 0))


def test_compiled_instance_is_deterministic():
    fam = PathFamilySpec(F51, 2, 1, 3)
    a, b = compile_family(fam), compile_family(fam)
    assert a.problem.to_json() == b.problem.to_json()


def test_group_modulus_flags_and_bounds():
    cat = circle_catalog(F51, 1)
    q = GroupQuotientSpec.build(cat, GROUP_PRESETS["d4"])
    rep = group_carpet_modulus(PathFamilySpec(F51, 1, 0, 1), q)
    assert "endpoint-orbit-nontrivial" in rep.flags
    trivial = GroupQuotientSpec.build(cat, GROUP_PRESETS["trivial"])
    rep0 = group_carpet_modulus(PathFamilySpec(F51, 1, 0, 1), trivial)
    assert rep0.flags == []
    assert rep0.value == pytest.approx(2.0, abs=1e-9)


def test_report_json_shape():
    rep = carpet_modulus(PathFamilySpec(F51, 1, 1, 3)).to_json()
    assert rep["schema"] == "cm-report/1"
    assert rep["pair"] == [1, 3]
    assert {r["circle_id"] for r in rep["rho"]} >= {1, 3}
    assert all(math.isfinite(r["weight"]) for r in rep["rho"])


def test_pair_orbits_partition():
    cat = circle_catalog(F51, 2)
    pairs = nonadjacent_pairs(cat, 2)
    reps = pair_orbit_representatives(cat, pairs)
    members = sorted(p for ms in reps.values() for p in ms)
    assert members == sorted(pairs)
    assert all(r in ms for r, ms in reps.items())
