import numpy as np
import pytest

from chansim.bec_analytic import (BecCascadeParams, bec_boundary, bec_channel, bec_r1_at_r2, bec_table,
                                  cascade_triple, completions, p2_max)
from chansim.errors import ValidationError
from chansim.info_measures import binary_entropy, triple_informations
from chansim.prob_core import marginal, joint_from_markov, product_joint, Pmf
from oracles import FROZEN, cascade_informations


def test_cascade_closed_forms_match_oracle():
    for pe, p2 in [(0.75, 0.5), (0.75, 0.0), (0.75, 0.3), (0.5, 0.2), (0.9, 0.45)]:
        prm = BecCascadeParams(pe, p2)
        assert (prm.i_xu, prm.i_xyu) == pytest.approx(cascade_informations(pe, p2), abs=1e-12)
        t = cascade_triple(prm)
        got = triple_informations(t.pU.probs, t.pXgU.kernel, t.pYgU.kernel)
        assert got == pytest.approx((prm.i_xu, prm.i_xyu), abs=1e-12)


def test_frozen_cascade_values():
    assert (BecCascadeParams(0.75, 0.5).i_xu, BecCascadeParams(0.75, 0.5).i_xyu) == pytest.approx(
        FROZEN["cascade_075_05"], abs=1e-12)
    assert (BecCascadeParams(0.75, 0.0).i_xu, BecCascadeParams(0.75, 0.0).i_xyu) == pytest.approx(
        FROZEN["cascade_075_0"], abs=1e-12)


def test_cascade_marginal_is_exact():
    for p2 in np.linspace(0, 0.5, 6):
        t = cascade_triple(BecCascadeParams(0.75, p2))
        pxy = marginal(joint_from_markov(t), [0, 1]).probs
        target = product_joint(Pmf([0.5, 0.5]), bec_channel(0.75)).probs
        assert np.abs(pxy - target).max() < 1e-15


def test_bad_parameters():
    with pytest.raises(ValidationError):
        BecCascadeParams(1.2, 0.1)
    with pytest.raises(ValidationError):
        BecCascadeParams(0.75, 0.8)
    with pytest.raises(ValidationError):
        bec_channel(-0.1)
    assert p2_max(0.75) == pytest.approx(0.5)
    assert p2_max(0.3) == pytest.approx(0.3)


def test_completions_at_075():
    (top, _), (bottom, _) = completions(0.75)
    assert (top.r1, top.r2) == pytest.approx((FROZEN["h_075"], 0.0), abs=1e-12)
    i_xu0, i_xyu0 = FROZEN["cascade_075_0"]
    assert (bottom.r1, bottom.r2) == pytest.approx((i_xu0, i_xyu0 - i_xu0), abs=1e-12)
    # r2 = 0 end: r1 = I(X,Y;U) of the cheapest cascade point
    assert bec_r1_at_r2(0.75, 0.0) == pytest.approx(FROZEN["h_075"], abs=1e-9)
    # large r2 end: r1 = I(X;Y) = 1 - pe
    assert bec_r1_at_r2(0.75, 10.0) == pytest.approx(0.25, abs=1e-12)


def test_r1_at_r2_monotone_and_consistent():
    r2 = np.linspace(0, 1.2, 40)
    r1 = np.array([bec_r1_at_r2(0.75, v) for v in r2])
    assert np.all(np.diff(r1) <= 1e-12)
    # each value is attained by some cascade point and no grid point beats it
    for v, target in zip(r2[::5], r1[::5]):
        vals = [max(p.i_xu, p.i_xyu - v) for p in (BecCascadeParams(0.75, q) for q in np.linspace(0, 0.5, 3001))]
        assert min(vals) >= target - 1e-9
        assert min(vals) <= target + 1e-4


def test_boundary_rows():
    b = bec_boundary(0.75, [0.0, 0.25, 0.5])
    rows = b.rows()
    assert len(rows) == 3
    for p2, p1, ixu, ixyu, r1, r2 in rows:
        assert r1 == pytest.approx(ixu)
        assert r2 == pytest.approx(ixyu - ixu)


def test_bec_table_sizes():
    t = bec_table(0.75, 10)
    assert len(t.points) == 10
    assert np.all(np.diff(t.r2) > 0)
    assert np.all(np.diff(t.r1) <= 0)
    assert t.r2[0] == 0.0 and t.r1[0] == pytest.approx(FROZEN["h_075"], abs=1e-12)
    assert len(bec_table(0.0, 5).points) == 1
    assert len(bec_table(1.0, 5).points) == 1


def test_degenerate_channels():
    assert bec_r1_at_r2(0.0, 0.0) == pytest.approx(1.0)  # lossless: U must carry X
    assert bec_r1_at_r2(1.0, 0.0) == pytest.approx(0.0)  # full erasure: independent
    assert binary_entropy(0.75) == pytest.approx(FROZEN["h_075"], abs=1e-15)


def test_channel_rows():
    np.testing.assert_array_equal(bec_channel(0.75).kernel, [[0.25, 0.75, 0.0], [0.0, 0.75, 0.25]])
    np.testing.assert_array_equal(bec_channel(0.0).kernel, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_array_equal(bec_channel(1.0).kernel, [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]])


def test_first_stage_erasure():
    assert BecCascadeParams(0.75, 0.0).p1 == pytest.approx(0.75)
    assert BecCascadeParams(0.75, 0.5).p1 == pytest.approx(0.5)
    # p2 = 0: the second stage is noiseless, so U carries exactly Y
    t = cascade_triple(BecCascadeParams(0.75, 0.0))
    y_given_u = t.pYgU.kernel
    assert np.all((y_given_u == 0) | (y_given_u == 1))


def test_table_range_at_075():
    t = bec_table(0.75, 50)
    assert len(t.points) == 50
    assert t.r1.max() == pytest.approx(FROZEN["h_075"], abs=1e-9)
    assert t.r1.min() == pytest.approx(0.25, abs=1e-9)


def test_table_degenerate_pe():
    lossless = bec_table(0.0, 10)
    assert lossless.r1.tolist() == pytest.approx([1.0])
    erased = bec_table(1.0, 10)
    assert erased.r1.tolist() == pytest.approx([0.0])
