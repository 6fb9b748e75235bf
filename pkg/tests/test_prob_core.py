import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chansim.errors import ValidationError, ZeroProbabilityError
from chansim.prob_core import (Channel, JointDist, Pmf, TripleDist, channel_from_json, condition, iid_prob,
                               joint_from_markov, joint_from_json, joint_to_json, make_pmf, make_rng, marginal,
                               pmf_from_json, product_joint, sample, split_rng, triple_from_json, triple_to_json)
from oracles import FROZEN


def test_make_pmf_examples():
    np.testing.assert_array_equal(make_pmf([2, 2]).probs, [0.5, 0.5])
    np.testing.assert_array_equal(make_pmf([1, 0]).probs, [1.0, 0.0])
    np.testing.assert_array_equal(make_pmf([3, 1]).probs, [0.75, 0.25])


def test_make_pmf_passthrough_when_normalized():
    w = np.array([0.1, 0.2, 0.7])
    assert make_pmf(w).probs.tolist() == w.tolist()


@pytest.mark.parametrize("bad, idx", [([0, 0], "0"), ([1, -1], "1"), ([0.5, float("nan")], "1")])
def test_make_pmf_rejects(bad, idx):
    with pytest.raises(ValidationError, match=idx):
        make_pmf(bad)


def test_pmf_tolerance():
    Pmf([0.5, 0.5 + 5e-13])
    with pytest.raises(ValidationError):
        Pmf([0.5, 0.5 + 1e-10])


def test_types_are_read_only():
    p = Pmf([0.5, 0.5])
    with pytest.raises(ValueError):
        p.probs[0] = 1.0


def test_marginal_examples(bern05, bec_kernel):
    u = JointDist(np.full((2, 2), 0.25))
    np.testing.assert_allclose(marginal(u, [0]).probs, [0.5, 0.5])
    eq = JointDist(np.diag([0.5, 0.5]))
    np.testing.assert_allclose(marginal(eq, [1]).probs, [0.5, 0.5])
    j = product_joint(bern05, bec_kernel)
    np.testing.assert_allclose(marginal(j, [1]).probs, FROZEN["bec075_y_marginal"], atol=1e-15)


@pytest.mark.parametrize("axes", [[], [2], [-1]])
def test_marginal_bad_axes(axes):
    with pytest.raises(ValidationError):
        marginal(JointDist(np.full((2, 2), 0.25)), axes)


def test_condition_examples(bern05, bec_kernel):
    u = JointDist(np.full((2, 2), 0.25))
    np.testing.assert_allclose(condition(u, 0, 0).probs, [0.5, 0.5])
    eq = JointDist(np.diag([0.5, 0.5]))
    np.testing.assert_allclose(condition(eq, 0, 1).probs, [0.0, 1.0])
    j = product_joint(bern05, bec_kernel)
    np.testing.assert_allclose(condition(j, 1, 1).probs, FROZEN["bec075_x_given_erasure"])


def test_condition_zero_event():
    eq = JointDist(np.diag([1.0, 0.0]))
    with pytest.raises(ZeroProbabilityError):
        condition(eq, 0, 1)


def test_joint_from_markov_examples(cascade_star, bern05, bec_kernel):
    ident = TripleDist(Pmf([0.5, 0.5]), Channel(np.eye(2)), Channel(np.eye(2)))
    pxy = marginal(joint_from_markov(ident), [0, 1]).probs
    np.testing.assert_allclose(pxy, np.diag([0.5, 0.5]))
    flat = TripleDist(Pmf([0.5, 0.5]), Channel(np.full((2, 2), 0.5)), Channel(np.full((2, 2), 0.5)))
    np.testing.assert_allclose(joint_from_markov(flat).probs, np.full((2, 2, 2), 0.125))
    pxy = marginal(joint_from_markov(cascade_star), [0, 1]).probs
    np.testing.assert_allclose(pxy, product_joint(bern05, bec_kernel).probs, atol=1e-15)


def test_triple_cardinality_cap():
    k = 6  # cap for 2x2 is 5
    with pytest.raises(ValidationError, match="cap"):
        TripleDist(Pmf(np.full(k, 1 / k)), Channel(np.full((k, 2), 0.5)), Channel(np.full((k, 2), 0.5)))


def test_iid_prob_examples():
    assert iid_prob(Pmf([0.5, 0.5]), [0, 1, 1]) == pytest.approx(0.125, abs=1e-15)
    assert iid_prob(Pmf([1.0, 0.0]), [0, 0]) == 1.0
    assert iid_prob(Pmf([0.75, 0.25]), [0, 1]) == pytest.approx(0.1875, abs=1e-15)
    assert iid_prob(Pmf([1.0, 0.0]), [1]) == 0.0
    with pytest.raises(ValidationError):
        iid_prob(Pmf([0.5, 0.5]), [2])


def test_iid_prob_no_underflow_at_64():
    assert iid_prob(Pmf([0.5, 0.5]), [0] * 64) == pytest.approx(2.0 ** -64, rel=1e-12)


def test_sample_examples():
    rng = make_rng(7)
    assert all(sample(Pmf([0, 0, 1.0]), rng) == 2 for _ in range(20))
    draws = sample(Pmf([0.5, 0.5]), make_rng(11), size=100_000)
    # 3 sigma of a binomial proportion at 1e5 draws is about 0.0047
    assert abs(draws.mean() - 0.5) < 0.01
    a = sample(Pmf([0.2, 0.3, 0.5]), make_rng(5), size=50)
    b = sample(Pmf([0.2, 0.3, 0.5]), make_rng(5), size=50)
    np.testing.assert_array_equal(a, b)


def test_sample_never_hits_zero_mass():
    d = sample(Pmf([0.5, 0.0, 0.5, 0.0]), make_rng(3), size=10_000)
    assert set(np.unique(d)) <= {0, 2}


def test_split_streams_differ():
    a, b = split_rng(1, 2)
    assert not np.array_equal(a.random(8), b.random(8))


def test_json_roundtrip(cascade_star):
    t = triple_from_json(json.dumps(triple_to_json(cascade_star)))
    np.testing.assert_array_equal(t.pU.probs, cascade_star.pU.probs)
    j = JointDist(np.arange(6.0).reshape(2, 3) / 15)
    np.testing.assert_array_equal(joint_from_json(joint_to_json(j)).probs, j.probs)
    assert pmf_from_json({"probs": [0.5, 0.5]}).alphabet_size == 2
    assert channel_from_json({"kernel": [[1, 0], [0, 1]]}).input_size == 2


@pytest.mark.parametrize("obj", [{"probs": [0.5, 0.5], "extra": 1}, {"p": [1.0]}, [0.5, 0.5]])
def test_json_rejects_bad_fields(obj):
    with pytest.raises(ValidationError):
        pmf_from_json(obj)


def test_joint_json_shape_mismatch():
    with pytest.raises(ValidationError, match="shape"):
        joint_from_json({"shape": [2, 2], "probs": [0.5, 0.5]})


@st.composite
def joints(draw, max_side=4):
    nx = draw(st.integers(1, max_side))
    ny = draw(st.integers(1, max_side))
    w = draw(st.lists(st.floats(0, 1), min_size=nx * ny, max_size=nx * ny))
    w = np.array(w)
    if w.sum() <= 0:
        w[0] = 1.0
    return JointDist(w.reshape(nx, ny) / w.sum())


@settings(max_examples=200, deadline=None)
@given(joints())
def test_marginal_mass_and_bayes(j):
    assert abs(marginal(j, [0]).probs.sum() - 1) < 1e-12
    assert abs(marginal(j, [1]).probs.sum() - 1) < 1e-12
    # p(x) = sum_y p(y) p(x|y)
    px = marginal(j, [0]).probs
    py = marginal(j, [1]).probs
    rebuilt = sum(py[y] * condition(j, 1, y).probs for y in range(len(py)) if py[y] > 0)
    np.testing.assert_allclose(rebuilt, px, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_markov_structure_holds(k, nx, ny, seed):
    rng = np.random.default_rng(seed)
    k = min(k, nx * ny + 1)
    t = TripleDist(Pmf(rng.dirichlet(np.ones(k))), Channel(rng.dirichlet(np.ones(nx), k)),
                   Channel(rng.dirichlet(np.ones(ny), k)))
    p = joint_from_markov(t).probs  # (x, y, u)
    pxu = p.sum(axis=1)
    pyu = p.sum(axis=0)
    pu = pxu.sum(axis=0)
    for x in range(nx):
        for u in range(k):
            if pxu[x, u] > 1e-12:
                np.testing.assert_allclose(p[x, :, u] / pxu[x, u], pyu[:, u] / pu[u], atol=1e-9)
