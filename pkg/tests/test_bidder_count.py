import math
from fractions import Fraction

import numpy as np
import pytest

from auctionkit.bidder_count import (
    BidderCountPMF,
    bid_uncertain,
    bid_uncertain_uniform,
    delta_p,
    delta_p_modform,
    discrete_symmetric_pmf,
    fixed_count_bid,
    mixture_weights,
    symmetric_weights_exact,
)
from auctionkit.distributions import LogNormal, Uniform
from auctionkit.equilibrium import AuctionSpec, bid_general, bid_uniform


@pytest.mark.parametrize("M, expected", [(2, Fraction(1)), (3, Fraction(1, 2)), (4, Fraction(1, 4)),
                                         (6, Fraction(1, 9)), (7, Fraction(1, 12))])
def test_delta_p_spot_values(M, expected):
    assert delta_p(M) == expected
    assert delta_p_modform(M) == expected


def test_delta_p_definitions_agree():
    assert all(delta_p(M) == delta_p_modform(M) for M in range(2, 1001))


def test_exact_normalisation_in_rationals():
    for M in range(2, 65):
        w = symmetric_weights_exact(M)
        assert sum(w) == 1
        assert w[0] == 0
        assert all(w[l] == w[M - l] for l in range(1, M))


def test_float_pmf_sums_to_one():
    for M in range(2, 1001):
        p = discrete_symmetric_pmf(M).p
        assert min(p) >= 0.0
        assert abs(math.fsum(p) - 1.0) <= 1e-12


def test_small_cases():
    assert discrete_symmetric_pmf(2).p == (0.0, 1.0)
    assert discrete_symmetric_pmf(3).p == (0.0, 0.5, 0.5)
    assert discrete_symmetric_pmf(4).p == (0.0, 0.25, 0.5, 0.25)
    assert discrete_symmetric_pmf(5).support() == [1, 2, 3, 4]


def test_pmf_rejects_bad_input():
    with pytest.raises(ValueError):
        discrete_symmetric_pmf(1)
    with pytest.raises(ValueError, match="sum"):
        BidderCountPMF(3, (0.0, 0.5, 0.6))
    with pytest.raises(ValueError):
        BidderCountPMF(3, (0.0, 1.0))
    with pytest.raises(ValueError):
        BidderCountPMF(3, (-0.1, 0.6, 0.5))
    with pytest.raises(ValueError):
        BidderCountPMF.degenerate(3, 3)


class TestMixtureBid:
    def test_two_bidders_halves(self):
        pmf = discrete_symmetric_pmf(2)
        for x in (0.0, 0.3, 1.0):
            assert bid_uncertain_uniform(pmf, x) == pytest.approx(0.5 * x)
            assert bid_uncertain(pmf, Uniform(1), x).bid == pytest.approx(0.5 * x)

    def test_three_bidders_at_top(self):
        assert bid_uncertain_uniform(discrete_symmetric_pmf(3), 1.0) == pytest.approx(7 / 12, abs=1e-15)

    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_degenerate_recovers_fixed_count(self, k):
        pmf = BidderCountPMF.degenerate(6, k)
        for x in (0.2, 0.7):
            assert bid_uncertain_uniform(pmf, x) == pytest.approx(bid_uniform(k + 1, x).bid)
            assert bid_uncertain(pmf, Uniform(1), x).bid == pytest.approx(bid_uniform(k + 1, x).bid)

    def test_only_rival_free_state_bids_zero(self):
        assert bid_uncertain_uniform(BidderCountPMF.degenerate(3, 0), 0.8) == 0.0

    def test_zero_valuation(self):
        assert bid_uncertain_uniform(discrete_symmetric_pmf(5), 0.0) == 0.0
        assert bid_uncertain(discrete_symmetric_pmf(5), LogNormal(), 0.0).bid == 0.0

    def test_uniform_fast_path_matches_general(self):
        pmf = discrete_symmetric_pmf(7)
        for x in np.linspace(0.05, 1.0, 9):
            assert bid_uncertain(pmf, Uniform(1), float(x)).bid == pytest.approx(bid_uncertain_uniform(pmf, float(x)), abs=1e-14)

    def test_lognormal_mixture_is_bounded(self):
        pmf = discrete_symmetric_pmf(5)
        d = LogNormal(0.0, 0.7)
        for x in (0.3, 1.0, 2.5):
            fixed = [bid_general(AuctionSpec(l + 1, d), x).bid for l in range(1, 5)]
            b = bid_uncertain(pmf, d, x).bid
            assert min(fixed) - 1e-12 <= b <= max(fixed) + 1e-12

    def test_lognormal_degenerate(self):
        d = LogNormal(0.2, 0.5)
        b = bid_uncertain(BidderCountPMF.degenerate(5, 3), d, 1.4).bid
        assert b == pytest.approx(bid_general(AuctionSpec(4, d), 1.4).bid, abs=1e-12)

    def test_monotone_in_valuation(self):
        pmf = discrete_symmetric_pmf(9)
        bids = [bid_uncertain_uniform(pmf, float(x)) for x in np.linspace(0, 1, 201)]
        assert np.all(np.diff(bids) >= -1e-15)

    def test_out_of_support(self):
        with pytest.raises(ValueError):
            bid_uncertain_uniform(discrete_symmetric_pmf(3), 1.2)
        with pytest.raises(ValueError):
            bid_uncertain(discrete_symmetric_pmf(3), Uniform(1), -0.2)


def test_mixture_weights():
    pmf = discrete_symmetric_pmf(6)
    w = mixture_weights(pmf, 0.4)
    assert w.sum() == pytest.approx(1.0)
    assert w[0] == 0.0
    assert np.all(mixture_weights(pmf, 0.0) == 0.0)
    # weights tilt toward many rivals as F(x) -> 1
    assert np.allclose(mixture_weights(pmf, 1.0), pmf.probs)


def test_fixed_count_bid():
    assert fixed_count_bid(Uniform(1), 0, 0.9) == 0.0
    assert fixed_count_bid(Uniform(1), 3, 0.8) == pytest.approx(0.6)


def test_mixture_weights_with_tiny_cdf():
    w = mixture_weights(discrete_symmetric_pmf(5), 1e-200)
    assert w.sum() == pytest.approx(1.0) and w[1] == pytest.approx(1.0)
