import os
import subprocess
import sys

import numpy as np
import pytest

from auctionkit import _kernels
from auctionkit.distributions import LogNormal
from auctionkit.equilibrium import AuctionSpec, bid_general
from auctionkit.numerics import riemann_sum

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _rows(n, seed=3):
    rng = np.random.default_rng(seed)
    x = np.abs(rng.normal(0.5, 1.0, n)) + 1e-3
    mu = np.abs(rng.normal(0.5, 1.0, n)) + 1e-3
    sigma = np.abs(rng.normal(0.5, 1.0, n)) + 1e-3
    M = np.maximum(2.0, np.ceil(np.abs(rng.normal(0.5, 4.0, n))))
    return x, mu, sigma, M


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_shading_matches_scalar_quadrature(backend):
    x, mu, sigma, M = _rows(60)
    shading, ok = _kernels.lognormal_shading(x, mu, sigma, M, force=backend)
    assert ok.all()
    for i in range(len(x)):
        ref = x[i] - bid_general(AuctionSpec(int(M[i]), LogNormal(mu[i], sigma[i])), x[i]).bid
        assert shading[i] == pytest.approx(ref, abs=2e-8)


@needs_numba
def test_backends_agree_on_shading():
    x, mu, sigma, M = _rows(2000)
    a, ok_a = _kernels.lognormal_shading(x, mu, sigma, M, force="numba")
    b, ok_b = _kernels.lognormal_shading(x, mu, sigma, M, force="numpy")
    assert ok_a.all() and ok_b.all()
    assert np.max(np.abs(a - b)) < 1e-9


def test_shading_against_riemann_oracle():
    d = LogNormal(0.0, 1.0)
    Fx = d.cdf(0.5)
    oracle = riemann_sum(lambda y: (d.cdf_array(y) / Fx) ** 4, 0.0, 0.5, 1_000_000, vectorized=True)
    for backend in ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else []):
        s, _ = _kernels.lognormal_shading(np.array([0.5]), 0.0, 1.0, 5.0, force=backend)
        assert s[0] == pytest.approx(oracle, abs=1e-9)


def test_deep_left_tail_bids_almost_everything():
    # F(x) underflows, but the ratio F(y)/F(x) is computed in logs
    for backend in ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else []):
        s, ok = _kernels.lognormal_shading(np.array([0.05]), 2.0, 0.1, 3.0, force=backend)
        assert ok[0] and 0 <= s[0] < 1e-3


def _clear_cases():
    bids = np.array([[0.2, 0.7, 0.7], [0.1, 0.2, 0.3], [0.9, -np.inf, 0.4], [0.5, 0.5, 0.1]])
    keys = np.array([[0.0, 0.2, 0.9], [0.5, 0.5, 0.5], [0.1, 0.2, 0.3], [0.8, 0.1, 0.9]])
    return bids, keys


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_clearing(backend):
    bids, keys = _clear_cases()
    winner, price = _kernels.clear_first_price(bids, 0.35, keys, force=backend)
    assert winner.tolist() == [2, -1, 0, 0]
    assert price.tolist() == [0.7, 0.0, 0.9, 0.5]


@needs_numba
def test_backends_agree_on_clearing():
    rng = np.random.default_rng(0)
    bids = np.round(rng.random((50_000, 5)), 2)  # rounding forces many ties
    keys = rng.random((50_000, 5))
    a = _kernels.clear_first_price(bids, 0.3, keys, force="numba")
    b = _kernels.clear_first_price(bids, 0.3, keys, force="numpy")
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_env_flag_selects_numpy():
    code = "from auctionkit import _kernels; print(_kernels.backend())"
    env = dict(os.environ, AUCTIONKIT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_backend_honours_flag_at_call_time(monkeypatch):
    monkeypatch.setenv("AUCTIONKIT_DISABLE_NUMBA", "true")
    assert _kernels.backend() == "numpy"
    monkeypatch.setenv("AUCTIONKIT_DISABLE_NUMBA", "0")
    assert _kernels.backend() == ("numba" if _kernels.HAVE_NUMBA else "numpy")
