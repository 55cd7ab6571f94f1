import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diamond_relay.info_measures import (
    DiscreteJointDist, DistributionError, auxiliary_identity_residual, conditional_entropy,
    entropy, mutual_information, random_joint, total_correlation,
)
from oracles import entropy_loops, h2, marginal_loops


def dsbs(q):
    """Doubly symmetric binary pair with crossover q."""
    return DiscreteJointDist(["A", "B"], [[(1 - q) / 2, q / 2], [q / 2, (1 - q) / 2]])


def copies(k):
    p = np.zeros((2,) * k)
    p[(0,) * k] = p[(1,) * k] = 0.5
    return DiscreteJointDist([f"U{i}" for i in range(k)], p)


joints = st.builds(
    lambda seed, sizes: random_joint(np.random.default_rng(seed), list("ABCD")[:len(sizes)], sizes,
                                     sparsity=0.2 if seed % 3 == 0 else 0.0),
    st.integers(0, 2**32 - 1),
    st.lists(st.integers(1, 3), min_size=4, max_size=4),
)


def test_entropy_examples():
    assert entropy(DiscreteJointDist(["X"], [0.5, 0.5]), "X") == pytest.approx(1.0, abs=1e-15)
    assert entropy(DiscreteJointDist(["X"], [1.0, 0.0]), "X") == 0.0
    assert entropy(DiscreteJointDist(["X"], [0.25, 0.75]), "X") == pytest.approx(0.8112781245, abs=1e-10)


def test_conditional_entropy_examples():
    assert conditional_entropy(dsbs(0.5), "A", "B") == pytest.approx(1.0, abs=1e-12)
    assert conditional_entropy(dsbs(0.0), "A", "B") == pytest.approx(0.0, abs=1e-12)
    assert conditional_entropy(dsbs(0.25), "A", "B") == pytest.approx(0.8112781245, abs=1e-10)
    # empty conditioning reduces to entropy
    assert conditional_entropy(dsbs(0.25), "A") == pytest.approx(1.0, abs=1e-12)


def test_mutual_information_examples():
    assert mutual_information(dsbs(0.5), "A", "B") == 0.0
    assert mutual_information(dsbs(0.0), "A", "B") == pytest.approx(1.0, abs=1e-12)
    assert mutual_information(dsbs(0.11), "A", "B") == pytest.approx(0.5000840418, abs=1e-9)
    assert mutual_information(dsbs(0.11), "A", "B") == pytest.approx(1 - h2(0.11), abs=1e-12)


def test_total_correlation_examples():
    rng = np.random.default_rng(1)
    prod = np.einsum("i,j,k->ijk", *(rng.dirichlet(np.ones(3)) for _ in range(3)))
    assert total_correlation(DiscreteJointDist("XYZ", prod), list("XYZ")) < 1e-12
    assert total_correlation(copies(3), ["U0", "U1", "U2"]) == pytest.approx(2.0, abs=1e-12)
    pair = DiscreteJointDist(["X", "Y"], [[0.375, 0.125], [0.125, 0.375]])
    assert total_correlation(pair, list("XY")) == pytest.approx(0.1887, abs=1e-4)
    assert total_correlation(pair, list("XY")) == pytest.approx(mutual_information(pair, "X", "Y"), abs=1e-12)
    assert total_correlation(pair, "X") == 0.0


def test_residual_examples():
    assert auxiliary_identity_residual(DiscreteJointDist("XYZU", np.full((2,) * 4, 1 / 16)),
                                       "X", "Y", "Z", "U") < 1e-12
    # U is a copy of (X, Y)
    rng = np.random.default_rng(3)
    base = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
    p = np.zeros((2, 2, 2, 4))
    for x in range(2):
        for y in range(2):
            p[x, y, :, 2 * x + y] = base[x, y]
    assert auxiliary_identity_residual(DiscreteJointDist("XYZU", p), "X", "Y", "Z", "U") < 1e-12


@settings(max_examples=60, deadline=None)
@given(joints)
def test_entropy_matches_loop_oracle(dist):
    for keep in [(0,), (1, 3), (0, 2, 3), (0, 1, 2, 3)]:
        labels = [dist.variable_names[k] for k in keep]
        ref = entropy_loops(marginal_loops(dist.probs, keep))
        assert entropy(dist, labels) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(joints)
def test_chain_rule(dist):
    h_ab = entropy(dist, list("AB"))
    assert h_ab == pytest.approx(entropy(dist, "A") + conditional_entropy(dist, "B", "A"), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(joints)
def test_nonnegative_outputs(dist):
    assert mutual_information(dist, "A", "B", list("CD")) >= 0.0
    assert mutual_information(dist, list("AC"), "D") >= 0.0
    assert total_correlation(dist, list("ABC"), "D") >= 0.0
    assert total_correlation(dist, list("ABCD")) >= 0.0


@settings(max_examples=60, deadline=None)
@given(joints, st.sampled_from("ABCD"))
def test_total_correlation_composition(dist, w):
    s = "ABCD"
    rest = s.replace(w, "")
    lhs = total_correlation(dist, list(s))
    rhs = total_correlation(dist, list(rest)) + mutual_information(dist, w, list(rest))
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=80, deadline=None)
@given(joints)
def test_auxiliary_identity(dist):
    assert auxiliary_identity_residual(dist, "A", "B", "C", "D") <= 1e-10
    assert auxiliary_identity_residual(dist, "D", "A", "B", "C") <= 1e-10


def test_mi_symmetry():
    dist = random_joint(np.random.default_rng(5), list("ABC"), (3, 2, 3))
    assert mutual_information(dist, "A", "B", "C") == mutual_information(dist, "B", "A", "C")


def test_marginal_reorders():
    dist = random_joint(np.random.default_rng(2), list("ABC"), (2, 3, 4))
    m = dist.marginal(["C", "A"])
    assert m.shape == (4, 2)
    np.testing.assert_allclose(m, dist.probs.sum(axis=1).T)


def test_json_roundtrip():
    dist = random_joint(np.random.default_rng(0), ["U", "X"], (2, 3))
    back = DiscreteJointDist.from_json(json.dumps(dist.to_json()))
    assert back.variable_names == ("U", "X")
    np.testing.assert_allclose(back.probs, dist.probs)


def test_normalization_tolerance():
    d = DiscreteJointDist(["X"], [0.5, 0.5 + 5e-10])
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DistributionError):
        DiscreteJointDist(["X"], [0.5, 0.6])


@pytest.mark.parametrize("call", [
    lambda d: entropy(d, []),
    lambda d: entropy(d, "Q"),
    lambda d: conditional_entropy(d, "A", "A"),
    lambda d: mutual_information(d, "A", list("AB")),
    lambda d: mutual_information(d, "A", "B", "A"),
    lambda d: total_correlation(d, []),
    lambda d: total_correlation(d, list("AB"), "B"),
    lambda d: auxiliary_identity_residual(d, "A", "B", "C", "A"),
    lambda d: auxiliary_identity_residual(d, "A", "B", "C", []),
])
def test_errors(call):
    d = random_joint(np.random.default_rng(4), list("ABC"), (2, 2, 2))
    with pytest.raises(DistributionError):
        call(d)


def test_constructor_guards():
    with pytest.raises(DistributionError):
        DiscreteJointDist(["X", "X"], np.full((2, 2), 0.25))
    with pytest.raises(DistributionError):
        DiscreteJointDist(["X"], np.full((2, 2), 0.25))
    with pytest.raises(DistributionError):
        DiscreteJointDist(["X"], [1.5, -0.5])
    with pytest.raises(DistributionError):
        DiscreteJointDist(["A", "B"], np.zeros((4000, 4000)))
