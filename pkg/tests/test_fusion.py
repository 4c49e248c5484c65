import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanosentry.detector import LinkOperatingPoint
from nanosentry.fusion import (
    LOG_SPACE_LINKS,
    FusionResult,
    LinkConditionals,
    average_over_slots,
    complement_conditionals,
    fuse,
    fuse_and,
    fuse_or,
    link_conditionals,
)

prob = st.floats(0.0, 1.0)
links_st = st.lists(st.builds(LinkConditionals, prob, prob), min_size=1, max_size=8)


def test_worked_link_example():
    c = link_conditionals(LinkOperatingPoint(0.0, 0.8, 0.1), 0.9, 0.15)
    assert c.p1_given_h1 == pytest.approx(0.73, abs=1e-15)
    assert c.p1_given_h0 == pytest.approx(0.205, abs=1e-15)


def test_transparent_and_uninformative_channels():
    c = link_conditionals(LinkOperatingPoint(0.0, 1.0, 0.0), 0.81, 0.25)
    assert (c.p1_given_h1, c.p1_given_h0) == (0.81, 0.25)
    c = link_conditionals(LinkOperatingPoint(0.0, 0.37, 0.37), 0.81, 0.25)
    assert (c.p1_given_h1, c.p1_given_h0) == pytest.approx((0.37, 0.37), abs=1e-15)


def test_three_identical_links():
    link = LinkConditionals(0.73, 0.205)
    a = fuse_and([link] * 3)
    assert (a.qd, a.qf) == pytest.approx((0.389017, 0.008615125), abs=1e-12)
    o = fuse_or([link] * 3)
    # 1 - 0.27**3 and 1 - 0.795**3 = 1 - 0.502459875
    assert (o.qd, o.qf) == pytest.approx((0.980317, 0.497540125), abs=1e-12)


def test_absorbing_values():
    assert fuse_and([LinkConditionals(0.0, 0.3), LinkConditionals(0.9, 0.1)]).qd == 0.0
    assert fuse_or([LinkConditionals(1.0, 0.3), LinkConditionals(0.2, 0.1)]).qd == 1.0


def test_empty_and_unknown_rule():
    with pytest.raises(ValueError):
        fuse_and([])
    with pytest.raises(ValueError):
        fuse_or([])
    with pytest.raises(ValueError):
        fuse([LinkConditionals(0.5, 0.5)], "majority")


@settings(max_examples=300, deadline=None)
@given(prob, prob, prob, prob)
def test_complements_sum_to_one(pd_fc, pf_fc, pd_cn, pf_cn):
    op = LinkOperatingPoint(0.0, pd_fc, pf_fc)
    c = link_conditionals(op, pd_cn, pf_cn)
    n1, n0 = complement_conditionals(op, pd_cn, pf_cn)
    assert abs(c.p1_given_h1 + n1 - 1.0) <= 1e-12
    assert abs(c.p1_given_h0 + n0 - 1.0) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(prob, prob)
def test_single_link_rules_are_identical(p1, p0):
    link = LinkConditionals(p1, p0)
    a, o = fuse_and([link]), fuse_or([link])
    assert (a.qd, a.qf) == (o.qd, o.qf) == (p1, p0)


@settings(max_examples=300, deadline=None)
@given(links_st)
def test_bounds(links):
    a, o = fuse_and(links), fuse_or(links)
    assert a.qd <= min(l.p1_given_h1 for l in links) + 1e-15
    assert o.qd >= max(l.p1_given_h1 for l in links) - 1e-15
    assert o.qf >= a.qf - 1e-15
    for r in (a, o):
        assert 0.0 <= r.qd <= 1.0 and 0.0 <= r.qf <= 1.0


@settings(max_examples=200, deadline=None)
@given(links_st, st.randoms(use_true_random=False))
def test_permutation_invariance(links, rnd):
    shuffled = list(links)
    rnd.shuffle(shuffled)
    for rule in ("and", "or"):
        a, b = fuse(links, rule), fuse(shuffled, rule)
        assert a.qd == pytest.approx(b.qd, abs=1e-15)
        assert a.qf == pytest.approx(b.qf, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(links_st, st.integers(0, 7), prob)
def test_detection_monotone_in_each_link(links, idx, bump):
    idx %= len(links)
    raised = list(links)
    old = raised[idx]
    raised[idx] = LinkConditionals(max(old.p1_given_h1, bump), old.p1_given_h0)
    for rule in ("and", "or"):
        assert fuse(raised, rule).qd >= fuse(links, rule).qd - 1e-15


def test_many_links_do_not_underflow():
    links = [LinkConditionals(1e-12, 1e-15)] * (LOG_SPACE_LINKS + 10)
    a = fuse_and(links)
    assert a.qd == pytest.approx(math.exp(40 * math.log(1e-12)), rel=1e-9) or a.qd == 0.0
    many = [LinkConditionals(0.99, 0.5)] * 100
    assert fuse_and(many).qd == pytest.approx(0.99**100, rel=1e-12)
    assert fuse_or(many).qf == pytest.approx(1 - 0.5**100, rel=1e-15)


def test_slot_averaging():
    r = FusionResult(0.6, 0.2, "and")
    avg = average_over_slots([r])
    assert (avg.qd_avg, avg.qf_avg, avg.slots) == (0.6, 0.2, 1)
    avg = average_over_slots([r] * 10)
    assert (avg.qd_avg, avg.qf_avg) == (0.6, 0.2)
    avg = average_over_slots([r, FusionResult(0.8, 0.4, "and")])
    assert (avg.qd_avg, avg.qf_avg) == pytest.approx((0.7, 0.3))
    with pytest.raises(ValueError):
        average_over_slots([r, FusionResult(0.8, 0.4, "or")])
    with pytest.raises(ValueError):
        average_over_slots([])
