import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diamond_relay.fme import (
    FMEError, LinearInequalitySystem, Relation, RowExplosionError, check_equivalence, eliminate,
    exact_lp, is_feasible, load_bundled, normalize, row_difference,
)
from oracles import contains_exact, lp_feasible, rows_of

F = Fraction
SYMS = ["a", "b", "c", "d", "e", "f"]


def system(symbols, rows):
    return LinearInequalitySystem.from_rows(symbols, [Relation.make(*r) for r in rows])


def random_system(seed, n_rows=10, with_eq=False):
    """Random system that holds at an integer center point (with slack on inequalities)."""
    rng = np.random.default_rng(seed)
    center = {v: int(rng.integers(-2, 3)) for v in SYMS}
    rows = []
    for i in range(n_rows):
        k = rng.integers(2, 5)
        vars_ = rng.choice(SYMS, size=k, replace=False)
        coeffs = {str(v): int(rng.integers(-3, 4)) or 1 for v in vars_}
        at = sum(c * center[v] for v, c in coeffs.items())
        rel = "=" if with_eq and i == 0 else ("<=" if rng.random() < 0.8 else ">=")
        slack = 0 if rel == "=" else int(rng.integers(0, 4))
        rows.append((coeffs, rel, at + slack if rel != ">=" else at - slack))
    return system(SYMS, rows), center


def random_point(rng, symbols, den=4, span=6):
    return {s: F(int(rng.integers(-span * den, span * den + 1)), den) for s in symbols}


def test_single_pair():
    sys_ = system(["x", "y"], [({"x": 1, "y": 1}, "<=", 1), ({"y": -1}, "<=", 0)])
    res = eliminate(sys_, ["y"]).result
    assert check_equivalence(res, system(["x"], [({"x": 1}, "<=", 1)]))
    assert res.symbols == ("x",)


def test_normalize_examples():
    assert normalize(system(["x"], [({"x": 2}, "<=", 4)])).relations == (
        Relation.make({"x": 1}, "<=", 2),)
    assert normalize(system(["x"], [({"x": -1}, ">=", -2)])).relations == (
        Relation.make({"x": 1}, "<=", 2),)
    # dominated duplicate and trivially true rows vanish
    n = normalize(system(["x"], [({"x": 1}, "<=", 2), ({"x": 3}, "<=", 3), ({}, "<=", 5)]))
    assert n.relations == (Relation.make({"x": 1}, "<=", 1),)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_normalize_idempotent(seed):
    s, _ = random_system(seed, with_eq=seed % 2 == 0)
    once = normalize(s)
    assert normalize(once) == once


def test_check_equivalence():
    s, _ = random_system(1)
    assert check_equivalence(s, s)
    rng = np.random.default_rng(0)
    scaled = [Relation.make({k: v * 3 for k, v in r.coeffs}, r.rel, r.const * 3) for r in s.relations]
    perm = [scaled[i] for i in rng.permutation(len(scaled))]
    assert check_equivalence(s, LinearInequalitySystem.from_rows(list(reversed(SYMS)), perm))
    assert not check_equivalence(s, LinearInequalitySystem.from_rows(SYMS, s.relations[1:]))
    with pytest.raises(FMEError):
        check_equivalence(s, system(["a"], []))


def test_row_difference():
    a = system(["x", "y"], [({"x": 1}, "<=", 1), ({"y": 1}, "<=", 2)])
    b = system(["x", "y"], [({"x": 2}, "<=", 2), ({"y": 1}, "<=", 3)])
    only_a, only_b = row_difference(a, b)
    assert only_a == [Relation.make({"y": 1}, "<=", 2)]
    assert only_b == [Relation.make({"y": 1}, "<=", 3)]


@pytest.mark.parametrize("seed", range(8))
def test_projection_matches_lp_probe(seed):
    s, _ = random_system(seed)
    victims = ["d", "e", "f"]
    res = eliminate(s, victims).result
    kept = [x for x in SYMS if x not in victims]
    assert not set(victims) & {v for r in res.relations for v in r.symbols()}
    rng = np.random.default_rng(100 + seed)
    for _ in range(100):
        pt = random_point(rng, kept)
        assert res.contains(pt) == lp_feasible(SYMS, rows_of(s), pt)


@pytest.mark.parametrize("seed", range(6))
def test_soundness_and_completeness(seed):
    s, center = random_system(seed + 50, with_eq=True)
    victims = ["a", "c", "e"]
    rep = eliminate(s, victims)
    kept = [x for x in SYMS if x not in victims]
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(400):
        full = {k: center[k] + F(int(rng.integers(-4, 5)), 4) for k in SYMS}
        # solve the equality row for one of its symbols so that it holds
        eq = s.relations[0]
        cm = eq.coeff_map
        pivot = sorted(cm)[0]
        full[pivot] = (eq.const - sum(v * full[k] for k, v in cm.items() if k != pivot)) / cm[pivot]
        if contains_exact(rows_of(s), full):
            hits += 1
            assert rep.result.contains({k: full[k] for k in kept})
    assert hits > 0
    checked = 0
    for _ in range(200):
        pt = {k: center[k] + F(int(rng.integers(-6, 7)), 3) for k in kept}
        if rep.result.contains(pt):
            checked += 1
            assert is_feasible(s, pt)
    assert checked > 0


def test_unit_substitution_and_no_lp_flag():
    s = system(["x", "y", "z"], [({"x": 1, "y": 1}, "=", 3), ({"y": 1, "z": 1}, "<=", 5),
                                 ({"y": -1}, "<=", 0)])
    with_lp = eliminate(s, ["y"]).result
    without = eliminate(s, ["y"], remove_redundant=False).result
    want = system(["x", "z"], [({"x": -1, "z": 1}, "<=", 2), ({"x": 1}, "<=", 3)])
    assert check_equivalence(with_lp, want)
    assert check_equivalence(without, want)


def test_lp_drops_implied_rows():
    s = system(["x", "y", "t"], [({"x": 1, "t": 1}, "<=", 1), ({"y": 1, "t": -1}, "<=", 1),
                                 ({"x": 1}, "<=", 0), ({"y": 1}, "<=", 0)])
    rep = eliminate(s, ["t"])
    # x + y <= 2 follows from x <= 0 and y <= 0
    want = system(["x", "y"], [({"x": 1}, "<=", 0), ({"y": 1}, "<=", 0)])
    assert check_equivalence(rep.result, want)
    assert rep.dropped_redundant == 1
    keep_all = eliminate(s, ["t"], remove_redundant=False).result
    assert len(keep_all.relations) == 3


def test_errors_and_guard():
    s, _ = random_system(3)
    with pytest.raises(FMEError, match="zz"):
        eliminate(s, ["zz"])
    with pytest.raises(FMEError):
        eliminate(LinearInequalitySystem.from_rows(["x"], []), ["x"])
    with pytest.raises(FMEError):
        Relation.make({"x": 1}, "<", 0)
    with pytest.raises(FMEError):
        LinearInequalitySystem.from_rows(["x"], [Relation.make({"y": 1}, "<=", 0)])
    # 20 rows +x and 20 rows -x give 400 combinations
    rows = [({"x": 1, f"p{i}": 1}, "<=", 1) for i in range(20)]
    rows += [({"x": -1, f"q{i}": 1}, "<=", 1) for i in range(20)]
    syms = ["x"] + [f"p{i}" for i in range(20)] + [f"q{i}" for i in range(20)]
    with pytest.raises(RowExplosionError):
        eliminate(system(syms, rows), ["x"], max_rows=100)


def test_json_roundtrip_and_rhs_symbols():
    doc = {"symbols": ["R", "C"], "rows": [{"coeffs": {"R": 1}, "rel": "<=", "rhs": {"C": 1, "const": "1/2"}}],
           "nonnegative": ["R"]}
    s = LinearInequalitySystem.from_json(json.dumps(doc))
    assert s.relations[0] == Relation.make({"R": 1, "C": -1}, "<=", F(1, 2))
    assert s.relations[1] == Relation.make({"R": -1}, "<=", 0)
    back = LinearInequalitySystem.from_json(json.dumps(s.to_json()))
    assert back == s
    with pytest.raises(FMEError):
        LinearInequalitySystem.from_json({"symbols": ["R"], "rows": [{"coeffs": {"Q": 1}}]})
    with pytest.raises(FMEError):
        LinearInequalitySystem.from_json({"rows": []})


def test_exact_lp():
    # min x + y  s.t.  x - y = 1, x, y >= 0
    assert exact_lp([[F(1), F(-1)]], [F(1)], [F(1), F(1)]) == ("optimal", F(1))
    assert exact_lp([[F(1), F(1)]], [F(-1)], [F(0), F(0)])[0] == "infeasible"
    assert exact_lp([[F(1), F(-1)]], [F(0)], [F(-1), F(0)])[0] == "unbounded"
    status, _ = exact_lp([[F(1), F(-1)]], [F(1)], [F(1), F(1)], stop_at=F(5))
    assert status == "reached"


def test_is_feasible():
    s = system(["x", "y"], [({"x": 1, "y": 1}, "<=", 1), ({"x": -1}, "<=", 0), ({"y": -1}, "<=", 0)])
    assert is_feasible(s)
    assert is_feasible(s, {"x": F(1, 2)})
    assert not is_feasible(s, {"x": 2})


def test_bundled_system_projection_counterexample():
    """The irredundant projection of the bundled split-rate system is not the
    four-row bundled reference: this point satisfies the reference rows yet
    admits no split-rate solution."""
    s = load_bundled("split_rate_system")
    ref = load_bundled("split_rate_projection")
    pt = {"R0": 1, "logD1": 0, "logD2": 0, "logD3": 0, "C11": F(1, 3), "C22": F(1, 3),
          "C33": F(1, 3), "C12": F(1, 3), "C13": F(1, 3), "C21": F(2, 3), "C31": F(1, 3),
          "C32": F(1, 3), "C23": 0}
    assert ref.contains(pt)
    assert not is_feasible(s, pt)
    victims = [x for x in s.symbols if x not in ref.symbols]
    res = eliminate(s, victims).result
    assert not res.contains(pt)
    # every reference row is implied by the projection (it is a relaxation)
    kept = list(res.symbols)
    for r in ref.relations:
        assert not lp_feasible(kept, rows_of(res) + [(r.coeff_map, ">=", r.const + F(1, 1000))], {})
