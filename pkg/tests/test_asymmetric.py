import numpy as np
import pytest

from auctionkit.asymmetric import (
    ShootingError,
    TwoGroupSpec,
    asymmetric_residuals,
    bid_asymmetric,
    solve_two_group,
    two_group_residuals,
)
from auctionkit.distributions import LogNormal, Uniform


def _uniform_pair_oracle(w1, w2, b):
    # two bidders, U(0,w1) vs U(0,w2): phi_i(b) = 2b / (1 + k_i b^2)
    k1 = 1 / w1 ** 2 - 1 / w2 ** 2
    return 2 * b / (1 + k1 * b * b), 2 * b / (1 - k1 * b * b)


@pytest.fixture(scope="module")
def weak_vs_strong():
    spec = TwoGroupSpec(Uniform(1.0), Uniform(2.0), 0, 2)
    return spec, solve_two_group(spec)


class TestSymmetricReduction:
    @pytest.mark.parametrize("M, K", [(2, 0), (4, 1), (5, 4), (4, 0)])
    def test_linear_bid(self, M, K):
        spec = TwoGroupSpec(Uniform(1.0), Uniform(1.0), K, M)
        table = solve_two_group(spec)
        groups = (1,) if spec.single_group else (1, 2)
        xs = np.linspace(0, 1, 101)
        err = max(abs(bid_asymmetric(table, g, float(x)).bid - (M - 1) / M * x) for g in groups for x in xs)
        assert err <= 1e-4
        assert table.b_bar == pytest.approx((M - 1) / M, abs=1e-8)


class TestUniformPair:
    def test_top_bid(self, weak_vs_strong):
        _, table = weak_vs_strong
        assert table.b_bar == pytest.approx(2 / 3, abs=1e-8)

    def test_matches_closed_form(self, weak_vs_strong):
        _, table = weak_vs_strong
        p1, p2 = _uniform_pair_oracle(1.0, 2.0, table.b)
        assert np.max(np.abs(table.phi1 - p1)) <= 1e-8
        assert np.max(np.abs(table.phi2 - p2)) <= 1e-8

    def test_residuals(self, weak_vs_strong):
        spec, table = weak_vs_strong
        assert np.max(np.abs(two_group_residuals(spec, table))) <= 1e-6

    def test_strong_bidder_shades_more(self, weak_vs_strong):
        _, table = weak_vs_strong
        for x in (0.2, 0.5, 0.9):
            weak = bid_asymmetric(table, 1, x).bid
            strong = bid_asymmetric(table, 2, x).bid
            assert strong < weak < x

    def test_table_shape(self, weak_vs_strong):
        _, table = weak_vs_strong
        assert table.b[0] == 0.0 and table.phi1[0] == 0.0
        assert np.all(np.diff(table.b) > 0)
        assert np.all(np.diff(table.phi1) > 0) and np.all(np.diff(table.phi2) > 0)
        assert len(list(table.rows())) == len(table.b)

    def test_general_checker_agrees(self, weak_vs_strong):
        # the fully asymmetric checker with one bidder per distribution
        _, table = weak_vs_strong
        b = 0.4
        p1, p2 = _uniform_pair_oracle(1.0, 2.0, b)
        k1 = 0.75
        d1 = 2 * (1 - k1 * b * b) / (1 + k1 * b * b) ** 2
        d2 = 2 * (1 + k1 * b * b) / (1 - k1 * b * b) ** 2
        res = asymmetric_residuals([Uniform(1.0), Uniform(2.0)], [p1, p2], [d1, d2], b)
        assert np.max(np.abs(res)) <= 1e-12


@pytest.mark.parametrize("F1, F2, K, M", [
    (Uniform(1.0), Uniform(1.5), 2, 4),   # three weak, one strong
    (Uniform(2.0), Uniform(1.0), 0, 3),   # one strong, two weak
    (Uniform(1.0), Uniform(1.5), 1, 3),
])
def test_larger_asymmetric_specs(F1, F2, K, M):
    spec = TwoGroupSpec(F1, F2, K, M)
    # the steep end near b_bar needs a finer grid than the default for 1e-6
    table = solve_two_group(spec, per_decade=800)
    assert np.max(np.abs(two_group_residuals(spec, table))) <= 1e-6
    for g in (1, 2):
        bids = [bid_asymmetric(table, g, x).bid for x in np.linspace(0, 1, 21)]
        assert np.all(np.diff(bids) > 0)


def test_residuals_shrink_with_refinement():
    spec = TwoGroupSpec(Uniform(2.0), Uniform(1.0), 0, 3)
    coarse, fine = (np.max(np.abs(two_group_residuals(spec, solve_two_group(spec, per_decade=n))))
                    for n in (200, 400))
    assert fine < coarse / 8


def test_two_strong_bidders_have_no_common_top_bid():
    with pytest.raises(ShootingError, match="common top bid|ill-determined"):
        solve_two_group(TwoGroupSpec(Uniform(1.0), Uniform(2.0), 1, 4))


def test_validation():
    with pytest.raises(ValueError):
        TwoGroupSpec(Uniform(1), Uniform(1), 0, 1)
    with pytest.raises(ValueError):
        TwoGroupSpec(Uniform(1), Uniform(1), 2, 2)
    with pytest.raises(ValueError, match="bounded"):
        TwoGroupSpec(LogNormal(), Uniform(1), 0, 2)
    spec = TwoGroupSpec(Uniform(1), Uniform(1), 0, 2)
    with pytest.raises(ValueError):
        solve_two_group(spec, steps=4)
    table = solve_two_group(spec)
    with pytest.raises(ValueError):
        bid_asymmetric(table, 1, 1.5)
    single = solve_two_group(TwoGroupSpec(Uniform(1), Uniform(1), 2, 3))
    with pytest.raises(ValueError):
        single.phi(2)
