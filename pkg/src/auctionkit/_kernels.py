"""Hot loops with a numba path and a pure-numpy path.

Set ``AUCTIONKIT_DISABLE_NUMBA=1`` (or run without numba installed) to use
the numpy implementations. Both paths are exercised by the test-suite and
compared in ``benchmarks/bench_kernels.py``.

Kernels:

* ``lognormal_shading`` -- ``int_0^x (F(y)/F(x))**(M-1) dy`` for log-normal
  ``F`` over a batch of ``(x, mu, sigma, M)`` rows. The bid is ``x`` minus it.
* ``clear_first_price`` -- winner and price of each round of a first-price
  auction with a reserve.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _env_disabled() -> bool:
    return os.environ.get("AUCTIONKIT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None


def backend() -> str:
    return "numba" if HAVE_NUMBA and not _env_disabled() else "numpy"


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

# 20-point Gauss-Legendre on each of `panels` geometric panels of [0, x];
# the integrand is flat near 0 and steep near x, so panels shrink toward x.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _panel_edges(panels: int) -> np.ndarray:
    # Fractions of x, graded geometrically toward both ends of [0, 1].
    half = panels // 2
    k = np.arange(half, dtype=float)
    tail = 0.5 * np.power(2.0, -k * 40.0 / half)
    return np.concatenate(([0.0], tail[::-1], 1.0 - tail[1:], [1.0]))


# Below the cutoff the integrand (F(y)/F(x))**(M-1) is under exp(-_CUT_LOG),
# so dropping [0, cutoff] costs at most x * exp(-_CUT_LOG).
_CUT_LOG = 40.0


def lower_cutoff_numpy(x, mu, sigma, n) -> np.ndarray:
    """Largest ``y <= x`` (to bisection accuracy) with ``n log(F(y)/F(x)) <= -_CUT_LOG``."""
    zx = (np.log(x) - mu) / sigma
    target = special.log_ndtr(zx) - _CUT_LOG / n
    lo = zx - 60.0
    hi = zx.copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = special.log_ndtr(mid) <= target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.minimum(np.exp(mu + sigma * lo), x)


def lognormal_shading_numpy(x, mu, sigma, M, panels: int = 48) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    n = np.asarray(M, dtype=float) - 1.0
    edges = _panel_edges(panels)
    lo, hi = edges[:-1], edges[1:]
    # fractional positions t in (0, 1): shape (panels * nodes,)
    t = (0.5 * (hi - lo)[:, None] * _GL_NODES[None, :] + 0.5 * (hi + lo)[:, None]).ravel()
    w = (0.5 * (hi - lo)[:, None] * _GL_WEIGHTS[None, :]).ravel()
    log_fx = special.log_ndtr((np.log(x) - mu) / sigma)
    a = lower_cutoff_numpy(x, mu, sigma, n)
    width = x - a
    y = a[:, None] + width[:, None] * t[None, :]
    log_fy = special.log_ndtr((np.log(y) - mu[:, None]) / sigma[:, None])
    ratio = np.exp(n[:, None] * (log_fy - log_fx[:, None]))
    out = width * (ratio @ w)
    return np.where(np.isfinite(log_fx), out, x)


def clear_first_price_numpy(bids, reserve, tie_keys):
    """Winner index per round (-1 = no sale) and the price paid."""
    bids = np.asarray(bids, dtype=float)
    eligible = bids >= reserve
    masked = np.where(eligible, bids, -np.inf)
    top = masked.max(axis=1)
    is_top = (masked == top[:, None]) & eligible
    keyed = np.where(is_top, tie_keys, -1.0)
    winner = keyed.argmax(axis=1)
    sold = np.isfinite(top)
    winner = np.where(sold, winner, -1)
    price = np.where(sold, top, 0.0)
    return winner.astype(np.int64), price


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    _njit = _numba.njit(cache=False, fastmath=False)

    @_njit
    def _log_ndtr(z):
        if z > -30.0:
            return math.log(0.5 * math.erfc(-z / _SQRT2))
        # asymptotic tail: Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - ...)
        z2 = z * z
        inv = 1.0 / z2
        series = 1.0 - inv + 3.0 * inv ** 2 - 15.0 * inv ** 3 + 105.0 * inv ** 4 - 945.0 * inv ** 5
        return -0.5 * z2 - math.log(-z) - _LOG_SQRT_2PI + math.log(series)

    @_njit
    def _shade_integrand(y, mu, sigma, n, log_fx):
        if y <= 0.0:
            return 0.0
        lf = _log_ndtr((math.log(y) - mu) / sigma)
        return math.exp(n * (lf - log_fx))

    @_njit
    def _lower_cutoff(x, mu, sigma, n, log_fx):
        zx = (math.log(x) - mu) / sigma
        target = log_fx - _CUT_LOG / n
        lo = zx - 60.0
        hi = zx
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _log_ndtr(mid) <= target:
                lo = mid
            else:
                hi = mid
        return min(math.exp(mu + sigma * lo), x)

    @_njit
    def _adaptive_simpson_row(a, x, mu, sigma, n, log_fx, tol, max_depth):
        # explicit stack; returns (value, converged)
        stack_lo = np.empty(max_depth * 2 + 8)
        stack_hi = np.empty(max_depth * 2 + 8)
        stack_flo = np.empty(max_depth * 2 + 8)
        stack_fm = np.empty(max_depth * 2 + 8)
        stack_fhi = np.empty(max_depth * 2 + 8)
        stack_s = np.empty(max_depth * 2 + 8)
        stack_eps = np.empty(max_depth * 2 + 8)
        stack_d = np.empty(max_depth * 2 + 8, dtype=np.int64)
        b = x
        fa = _shade_integrand(a, mu, sigma, n, log_fx)
        fb = 1.0
        fm = _shade_integrand(0.5 * (a + b), mu, sigma, n, log_fx)
        sp = 0
        stack_lo[0] = a
        stack_hi[0] = b
        stack_flo[0] = fa
        stack_fm[0] = fm
        stack_fhi[0] = fb
        stack_s[0] = (b - a) * (fa + 4.0 * fm + fb) / 6.0
        stack_eps[0] = tol
        stack_d[0] = 0
        sp = 1
        total = 0.0
        forced = 0.0  # error estimate left on leaves cut off at max_depth
        while sp > 0:
            sp -= 1
            lo = stack_lo[sp]
            hi = stack_hi[sp]
            flo = stack_flo[sp]
            fmid = stack_fm[sp]
            fhi = stack_fhi[sp]
            s = stack_s[sp]
            eps = stack_eps[sp]
            d = stack_d[sp]
            mid = 0.5 * (lo + hi)
            flm = _shade_integrand(0.5 * (lo + mid), mu, sigma, n, log_fx)
            frm = _shade_integrand(0.5 * (mid + hi), mu, sigma, n, log_fx)
            left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
            right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
            s2 = left + right
            delta = s2 - s
            # force a few levels so a flat first guess cannot be accepted early
            if d >= 4 and (abs(delta) <= 15.0 * eps or d >= max_depth):
                if abs(delta) > 15.0 * eps:
                    forced += abs(delta) / 15.0
                total += s2 + delta / 15.0
                continue
            stack_lo[sp] = mid
            stack_hi[sp] = hi
            stack_flo[sp] = fmid
            stack_fm[sp] = frm
            stack_fhi[sp] = fhi
            stack_s[sp] = right
            stack_eps[sp] = 0.5 * eps
            stack_d[sp] = d + 1
            sp += 1
            stack_lo[sp] = lo
            stack_hi[sp] = mid
            stack_flo[sp] = flo
            stack_fm[sp] = flm
            stack_fhi[sp] = fmid
            stack_s[sp] = left
            stack_eps[sp] = 0.5 * eps
            stack_d[sp] = d + 1
            sp += 1
        return total, forced <= tol

    @_njit
    def _lognormal_shading_numba(x, mu, sigma, M, abs_tol, max_depth):
        out = np.empty(x.shape[0])
        ok = np.ones(x.shape[0], dtype=np.bool_)
        for i in range(x.shape[0]):
            log_fx = _log_ndtr((math.log(x[i]) - mu[i]) / sigma[i])
            if not math.isfinite(log_fx):
                out[i] = x[i]
                continue
            n = M[i] - 1.0
            a = _lower_cutoff(x[i], mu[i], sigma[i], n, log_fx)
            v, conv = _adaptive_simpson_row(a, x[i], mu[i], sigma[i], n, log_fx,
                                            abs_tol, max_depth)
            out[i] = v
            ok[i] = conv
        return out, ok

    @_njit
    def _clear_first_price_numba(bids, reserve, tie_keys):
        n, m = bids.shape
        winner = np.full(n, -1, dtype=np.int64)
        price = np.zeros(n)
        for i in range(n):
            best = -1.0
            w = -1
            key = -1.0
            for j in range(m):
                b = bids[i, j]
                if b < reserve:
                    continue
                if w < 0 or b > best or (b == best and tie_keys[i, j] > key):
                    best = b
                    w = j
                    key = tie_keys[i, j]
            if w >= 0:
                winner[i] = w
                price[i] = best
        return winner, price


def lognormal_shading(x, mu, sigma, M, abs_tol: float = 1e-11, max_depth: int = 40,
                      force: str | None = None):
    """Returns ``(shading, converged)`` arrays; bid = ``x - shading``."""
    x = np.ascontiguousarray(x, dtype=float)
    mu = np.ascontiguousarray(np.broadcast_to(mu, x.shape), dtype=float)
    sigma = np.ascontiguousarray(np.broadcast_to(sigma, x.shape), dtype=float)
    M = np.ascontiguousarray(np.broadcast_to(M, x.shape), dtype=float)
    which = force or backend()
    if which == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return _lognormal_shading_numba(x, mu, sigma, M, abs_tol, max_depth)
    out = lognormal_shading_numpy(x, mu, sigma, M)
    return out, np.isfinite(out)


def clear_first_price(bids, reserve: float, tie_keys, force: str | None = None):
    bids = np.ascontiguousarray(bids, dtype=float)
    tie_keys = np.ascontiguousarray(tie_keys, dtype=float)
    which = force or backend()
    if which == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return _clear_first_price_numba(bids, float(reserve), tie_keys)
    return clear_first_price_numpy(bids, reserve, tie_keys)
