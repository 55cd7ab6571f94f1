import itertools
import json
from dataclasses import replace

import numpy as np
import pytest

from diamond_relay.info_measures import DiscreteJointDist, mutual_information
from diamond_relay.mc_typicality import (
    CodebookSizeExperiment, CoveringExperiment, ExperimentTooLarge, PackingExperiment,
    TypicalityConfig, codebook_size, codebook_size_exponent, delta, experiment_from_json,
    is_typical, phase_scan, run, sim_codebook_size, sim_covering, sim_packing,
    typical_count_bounds, typical_types,
)

BIT = DiscreteJointDist(["U"], [0.5, 0.5])
SAME = DiscreteJointDist(["U1", "U2"], [[0.5, 0.0], [0.0, 0.5]])
INDEP = DiscreteJointDist(["U1", "U2"], np.full((2, 2), 0.25))


def bsc(q):
    return DiscreteJointDist(["U1", "Y"], [[(1 - q) / 2, q / 2], [q / 2, (1 - q) / 2]])


def agree(a, b, slack=0.02):
    return abs(a.mean - b.mean) <= a.half_width_95 + b.half_width_95 + slack


def test_is_typical_examples():
    assert is_typical([[0, 1, 0, 1]], BIT, 0.1)
    assert not is_typical([[0, 0, 0, 1]], BIT, 0.1)
    point = DiscreteJointDist(["A", "B"], [[1.0, 0.0], [0.0, 0.0]])
    assert is_typical([[0, 0], [0, 0]], point, 0.5)
    assert not is_typical([[0, 1], [0, 0]], point, 0.5)
    with pytest.raises(ValueError):
        is_typical([[0, 1], [0]], INDEP, 0.1)
    with pytest.raises(ValueError):
        is_typical([[0, 2]], BIT, 0.1)


def test_count_bounds_match_definition():
    p = np.array([0.1, 0.2, 0.3, 0.4, 0.0])
    for n in (7, 10, 33):
        for eps in (0.05, 0.1, 0.5):
            lo, hi = typical_count_bounds(p, n, eps)
            for j, pj in enumerate(p):
                ok = [c for c in range(n + 1) if abs(c / n - pj) <= eps * pj + 1e-12]
                if ok:
                    assert (lo[j], hi[j]) == (min(ok), max(ok))
                else:
                    assert lo[j] > hi[j]


def test_typical_types_enumeration():
    p = np.array([0.2, 0.3, 0.5, 0.0])
    n, eps = 12, 0.4
    got = {tuple(t) for t in typical_types(p, n, eps)}
    lo, hi = typical_count_bounds(p, n, eps)
    want = {c + (0,) for c in itertools.product(range(n + 1), repeat=3)
            if sum(c) == n and all(lo[j] <= c[j] <= hi[j] for j in range(3))}
    assert got == want


def test_iid_sequences_are_typical():
    rng = np.random.default_rng(0)
    n, hits = 512, 0
    for _ in range(400):
        a = rng.integers(0, 2, n)
        b = rng.integers(0, 2, n)
        hits += is_typical([a, b], INDEP, 0.2)
    assert hits / 400 >= 0.95


def test_codebook_size():
    assert codebook_size(0.0, 100) == 1
    assert codebook_size(0.5, 4) == 4
    assert 2**102 < codebook_size(0.8, 128) <= 2**103
    assert codebook_size(1.0, 200) == 2**200
    with pytest.raises(ValueError):
        codebook_size(-0.1, 4)


def test_config_validation():
    with pytest.raises(ValueError):
        TypicalityConfig(0.0, 4)
    with pytest.raises(ValueError):
        TypicalityConfig(0.1, 0)


@pytest.mark.parametrize("rates", [(0.5, 0.5), (0.3, 0.3), (0.15, 0.15)])
def test_covering_engines_agree(rates):
    exp = CoveringExperiment(SAME, {"U1": rates[0], "U2": rates[1]}, 0.0,
                             TypicalityConfig(0.1, 14), 400, 3, "brute")
    assert agree(sim_covering(exp), sim_covering(replace(exp, engine="type")))


def test_covering_determinism_and_bounds():
    exp = CoveringExperiment(SAME, {"U1": 0.4, "U2": 0.4}, 0.0, TypicalityConfig(0.1, 32), 100, 9)
    a, b = sim_covering(exp), sim_covering(exp)
    assert a == b
    assert 0.0 <= a.mean <= 1.0 and a.half_width_95 >= 0


def test_covering_independent_decreases():
    exp = CoveringExperiment(INDEP, {"U1": 0.2, "U2": 0.2}, 0.0, TypicalityConfig(0.2, 32), 400, 5)
    rows = phase_scan(exp, [32, 64, 128])
    means = [est.mean for _, _, est in rows]
    for (_, _, e0), (_, _, e1) in zip(rows, rows[1:]):
        assert e1.mean <= e0.mean + e0.half_width_95
    assert means[-1] < 0.05


def test_covering_above_threshold_scan():
    exp = CoveringExperiment(SAME, {"U1": 0.8, "U2": 0.8}, 0.0, TypicalityConfig(0.1, 32), 200, 7)
    rows = phase_scan(exp, [32, 64, 128])
    for (_, _, e0), (_, _, e1) in zip(rows, rows[1:]):
        assert e1.mean <= e0.mean + e0.half_width_95


@pytest.mark.parametrize("rate", [0.2, 0.45, 0.6])
def test_packing_engines_agree(rate):
    exp = PackingExperiment(bsc(0.1), {"U1": rate}, TypicalityConfig(0.15, 24), 400, 4, "brute")
    assert agree(sim_packing(exp), sim_packing(replace(exp, engine="type")))


def test_packing_scan_below_threshold():
    i = mutual_information(bsc(0.1), "U1", "Y")
    exp = PackingExperiment(bsc(0.1), {"U1": 0.9 * i}, TypicalityConfig(0.1, 64), 200, 2)
    rows = phase_scan(exp, [64, 128, 256])
    for (_, _, e0), (_, _, e1) in zip(rows, rows[1:]):
        assert e1.mean <= e0.mean + e0.half_width_95


def test_packing_single_independent_candidate():
    # with Y independent of U1 the lone candidate has the same law as the
    # true codeword, so it is typical about as often as an i.i.d. pair
    joint = DiscreteJointDist(["U1", "Y"], np.full((2, 2), 0.25))
    exp = PackingExperiment(joint, {"U1": 0.0}, TypicalityConfig(0.2, 256), 400, 1, "brute")
    est = sim_packing(exp)
    assert agree(est, sim_packing(replace(exp, engine="type")))
    assert est.mean > 0.5


@pytest.mark.parametrize("joint,rate", [(INDEP, 0.3), (SAME, 0.6), (bsc(0.2), 0.5)])
def test_codebook_size_engines_agree(joint, rate):
    exp = CodebookSizeExperiment(joint, "U1" if "U1" in joint.variable_names else "U", rate,
                                 TypicalityConfig(0.2, 24), 300, 6, "brute")
    a, b = sim_codebook_size(exp), sim_codebook_size(replace(exp, engine="type"))
    assert abs(a.mean - b.mean) <= 1.5 * (a.half_width_95 + b.half_width_95) + 0.05 * a.mean + 0.05


def test_codebook_size_examples():
    cfg = TypicalityConfig(0.1, 64)
    indep = CodebookSizeExperiment(INDEP, "U1", 0.5, cfg, 400, 1)
    e = codebook_size_exponent(sim_codebook_size(indep), 64)
    assert abs(e - 0.5) <= delta(INDEP, 0.1, "U1", "U2")
    cfg = TypicalityConfig(0.1, 128)
    low = sim_codebook_size(CodebookSizeExperiment(SAME, "U1", 0.5, cfg, 400, 1))
    assert low.mean < 1
    high = sim_codebook_size(CodebookSizeExperiment(SAME, "U1", 1.5, cfg, 400, 1))
    assert codebook_size_exponent(high, 128) <= 0.5 + delta(SAME, 0.1, "U1", "U2")


def test_phase_scan_seed_derivation():
    exp = CoveringExperiment(SAME, {"U1": 0.5, "U2": 0.5}, 0.0, TypicalityConfig(0.1, 8), 20, 1234)
    rows = phase_scan(exp, [16])
    assert len(rows) == 1
    n, seed, est = rows[0]
    assert (n, seed) == (16, 1234 ^ 16)
    direct = run(replace(exp, config=TypicalityConfig(0.1, 16), seed=1234 ^ 16))
    assert est == direct
    with pytest.raises(ValueError):
        phase_scan(exp, [])


def test_guards():
    big = CoveringExperiment(SAME, {"U1": 0.9, "U2": 0.9}, 0.0, TypicalityConfig(0.1, 64), 1, 0, "brute")
    with pytest.raises(ExperimentTooLarge, match="too large"):
        sim_covering(big)
    pack = PackingExperiment(bsc(0.1), {"U1": 0.9}, TypicalityConfig(0.1, 64), 1, 0, "brute")
    with pytest.raises(ExperimentTooLarge):
        sim_packing(pack)
    dic = CodebookSizeExperiment(SAME, "U1", 0.5, TypicalityConfig(0.1, 64), 1, 0, "brute")
    with pytest.raises(ExperimentTooLarge):
        sim_codebook_size(dic)
    huge = CoveringExperiment(SAME, {"U1": 0.5, "U2": 0.5}, 0.0, TypicalityConfig(0.1, 10**7), 1, 0)
    with pytest.raises(ExperimentTooLarge):
        sim_covering(huge)
    with pytest.raises(ValueError):
        sim_covering(replace(big, engine="magic"))


def test_experiment_from_json(tmp_path):
    doc = {"joint": SAME.to_json(), "rates": {"U1": 0.5, "U2": 0.5}, "bin_rate": 0.0,
           "epsilon": 0.1, "n": 16, "trials": 10, "seed": 3}
    path = tmp_path / "cover.json"
    path.write_text(json.dumps(doc))
    exp = experiment_from_json(str(path), "cover", trials=5)
    assert isinstance(exp, CoveringExperiment) and exp.trials == 5
    pack = experiment_from_json({"joint": bsc(0.1).to_json(), "rates": {"U1": 0.3}}, "pack")
    assert isinstance(pack, PackingExperiment)
    dic = experiment_from_json({"joint": SAME.to_json(), "u": "U1", "rate": 0.5}, "dict")
    assert isinstance(dic, CodebookSizeExperiment)
    with pytest.raises(ValueError, match="rates"):
        experiment_from_json({"joint": SAME.to_json()}, "cover")
    with pytest.raises(ValueError):
        experiment_from_json(doc, "bogus")
