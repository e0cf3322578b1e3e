"""Symmetric independent-private-value equilibrium bids, payments and revenue.

All bid functions return a :class:`BidResult`; ``method`` records whether the
value came from a closed form, adaptive quadrature, or a Taylor-type
approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .distributions import LogNormal, Uniform, ValuationDistribution, norm_cdf
from .numerics import (
    DEFAULT_QUAD,
    QuadratureSpec,
    RootFindingError,
    RootSpec,
    find_root,
    integrate,
    integrate_pieces,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class BelowReserveError(ValueError):
    """Valuation below the reserve (or screening level): the type does not bid."""


@dataclass(frozen=True)
class AuctionSpec:
    M: int
    dist: ValuationDistribution
    reserve: float = 0.0
    seller_value: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"an auction needs an integer M >= 2 bidders, got {self.M}")
        if self.reserve < 0 or self.reserve > self.dist.hi:
            raise ValueError(f"reserve {self.reserve} outside support [0, {self.dist.hi}]")
        if not (0.0 <= self.seller_value < self.dist.hi):
            raise ValueError(f"seller value must lie in [0, {self.dist.hi}), got {self.seller_value}")

    def G(self, y: float) -> float:
        return self.dist.cdf(y) ** (self.M - 1)

    def g(self, y: float) -> float:
        n = self.M - 1
        return n * self.dist.cdf(y) ** (n - 1) * self.dist.pdf(y)


@dataclass(frozen=True)
class BidResult:
    bid: float
    method: str
    est_error: Optional[float] = None

    def to_dict(self) -> dict:
        return {"bid": self.bid, "method": self.method, "est_error": self.est_error}


def _clamp(bid: float, lo: float, hi: float) -> float:
    return min(max(bid, lo), hi)


def _check_valuation(dist: ValuationDistribution, x: float):
    if not (dist.lo <= x <= dist.hi) or math.isnan(x):
        raise ValueError(f"valuation {x} outside support [{dist.lo}, {dist.hi}]")


def _shading(spec: AuctionSpec, lo: float, x: float, quad: QuadratureSpec) -> float:
    """``int_lo^x G(y)/G(x) dy`` with the ratio taken in logs, so tails that
    underflow ``F`` itself still integrate correctly."""
    dist = spec.dist
    log_fx = dist.logcdf(x)
    n = spec.M - 1

    def ratio(y):
        return math.exp(n * (dist.logcdf(y) - log_fx))

    knots = [lo, x]
    if spec.dist.kind == "irwinhall2" and lo < 1.0 < x:
        knots = [lo, 1.0, x]
    return integrate_pieces(ratio, knots, quad)


def bid_general(spec: AuctionSpec, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """``x - int_0^x (F(y)/F(x))**(M-1) dy`` by adaptive quadrature."""
    _check_valuation(spec.dist, x)
    if x == 0.0 or spec.dist.logcdf(x) == -math.inf:
        return BidResult(0.0, "quadrature", 0.0)
    shade = _shading(spec, 0.0, x, quad)
    tol = max(quad.abs_tol, quad.rel_tol * abs(shade))
    return BidResult(_clamp(x - shade, 0.0, x), "quadrature", tol)


def bid_uniform(M: int, x: float, omega: float = 1.0) -> BidResult:
    if M < 2:
        raise ValueError("M must be >= 2")
    if not 0.0 <= x <= omega:
        raise ValueError(f"valuation {x} outside [0, {omega}]")
    return BidResult((M - 1) / M * x, "closed_form", 0.0)


def bid_lognormal_approx(x: float, dist: Optional[LogNormal] = None, M: Optional[int] = None,
                         quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """Rough small-valuation approximation ``x / 2``.

    When ``dist`` and ``M`` are supplied the gap to the quadrature bid is
    reported as ``est_error``; otherwise ``est_error`` is ``None``.
    """
    if x < 0:
        raise ValueError("valuation must be non-negative")
    approx = 0.5 * x
    err = None
    if dist is not None and M is not None:
        err = abs(bid_general(AuctionSpec(M, dist), x, quad).bid - approx)
    return BidResult(approx, "taylor_approx", err)


def bid_reserve_general(spec: AuctionSpec, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """``x - int_r^x G(y)/G(x) dy`` for ``x >= r``."""
    r = spec.reserve
    if r == 0.0:
        return bid_general(spec, x, quad)
    _check_valuation(spec.dist, x)
    if x < r:
        raise BelowReserveError(f"below reserve: no bid (x={x} < r={r})")
    if x == r:
        return BidResult(r, "quadrature", 0.0)
    shade = _shading(spec, r, x, quad)
    tol = max(quad.abs_tol, quad.rel_tol * abs(shade))
    return BidResult(_clamp(x - shade, r, x), "quadrature", tol)


def bid_reserve_uniform(M: int, r: float, x: float, omega: float = 1.0,
                        printed_variant: bool = False) -> BidResult:
    """Closed form ``r**M / (M x**(M-1)) + (M-1) x / M``.

    ``printed_variant=True`` swaps the leading coefficient ``1/M`` for the
    printed ``(M+1)/M``; it is kept only for comparison and breaks
    ``beta(r) = r``.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if not 0.0 <= r <= omega or x > omega:
        raise ValueError(f"need 0 <= r <= x <= omega, got r={r}, x={x}, omega={omega}")
    if x < r:
        raise BelowReserveError(f"below reserve: no bid (x={x} < r={r})")
    if x == 0.0:
        return BidResult(0.0, "closed_form", 0.0)
    coef = (M + 1) / M if printed_variant else 1.0 / M
    # r**M / x**(M-1) written as r (r/x)**(M-1) so tiny x cannot underflow to 0/0
    bid = coef * r * (r / x) ** (M - 1) + (M - 1) / M * x
    if x == r and not printed_variant:
        bid = r
    return BidResult(bid, "closed_form", 0.0)


def bid_reserve_lognormal(mu: float, sigma: float, M: int, r: float, x: float,
                          printed_variant: bool = False,
                          quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """First-order Taylor bid ``x - h(r) (x - r) / h(x)`` with ``h = Phi(z)**(M-1)``.

    ``est_error`` is the distance to the quadrature bid. ``printed_variant``
    evaluates the printed variant that carries ``h'(r)`` in place of ``h(r)``.
    """
    dist = LogNormal(mu, sigma)
    if not 0.0 < r:
        raise ValueError("log-normal reserve bid needs r > 0")
    if x < r:
        raise BelowReserveError(f"below reserve: no bid (x={x} < r={r})")
    n = M - 1
    zr, zx = dist.z(r), dist.z(x)
    if printed_variant:
        # unnormalised h(y) = [int_{-inf}^{z} exp(-t^2/2) dt]^(M-1)
        h = lambda z: (_SQRT_2PI * norm_cdf(z)) ** n
        dh_r = n * (_SQRT_2PI * norm_cdf(zr)) ** (n - 1) * math.exp(-0.5 * zr * zr) / (r * sigma)
        hx = h(zx)
        approx = x * (dh_r * (x - r) / hx + (r / x) * h(zr) / hx)
    else:
        ratio = math.exp(n * (math.log(norm_cdf(zr)) - math.log(norm_cdf(zx)))) if x != r else 1.0
        approx = x - ratio * (x - r)
    exact = bid_reserve_general(AuctionSpec(M, dist, reserve=r), x, quad).bid
    return BidResult(approx, "taylor_approx", abs(exact - approx))


def optimal_reserve(dist: ValuationDistribution, seller_value: float = 0.0, tol: float = 1e-12) -> float:
    """Root of ``r - (1 - F(r)) / f(r) - x_s``."""
    xs = seller_value
    if not 0.0 <= xs < dist.hi:
        raise ValueError(f"seller value must lie in [0, {dist.hi})")

    def foc(r):
        return r - xs - (1.0 - dist.cdf(r)) / dist.pdf(r)

    if isinstance(dist, Uniform):
        lo, hi = xs, dist.omega
    else:
        lo = max(xs, dist.quantile(1e-12))
        hi = dist.quantile(1.0 - 1e-12)
    # pdf may vanish at the lower end (log-normal near 0); walk inward.
    while dist.pdf(lo) == 0.0 and lo < hi:
        lo = lo + 1e-9 * (hi - lo) if lo > 0 else 1e-12 * hi
    try:
        return find_root(foc, RootSpec((lo, hi), tol=tol))
    except RootFindingError as exc:
        raise RootFindingError(f"no optimal reserve in [{lo}, {hi}]: {exc}") from exc


def expected_payment(dist: ValuationDistribution, M: int, x: float, reserve: float = 0.0,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Interim expected payment ``m(x) = G(x) beta(x)`` (0 below the reserve)."""
    spec = AuctionSpec(M, dist, reserve=reserve)
    if x < reserve or x == 0.0:
        return 0.0
    return spec.G(x) * bid_reserve_general(spec, x, quad).bid


def _ex_ante_knots(dist: ValuationDistribution, lo: float) -> list[float]:
    top = dist.upper(1e-10)
    inner = [dist.quantile(p) for p in (0.01, 0.25, 0.5, 0.75, 0.99)]
    return [lo] + [q for q in inner if lo < q < top] + [top]


def expected_ex_ante_payment(dist: ValuationDistribution, M: int, reserve: float = 0.0,
                             quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``r G(r) (1 - F(r)) + int_r^w y (1 - F(y)) g(y) dy``."""
    spec = AuctionSpec(M, dist, reserve=reserve)
    r = reserve
    body = integrate_pieces(lambda y: y * (1.0 - dist.cdf(y)) * spec.g(y),
                            _ex_ante_knots(dist, r), quad)
    return r * spec.G(r) * (1.0 - dist.cdf(r)) + body


def expected_revenue(dist: ValuationDistribution, M: int, reserve: float = 0.0,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return M * expected_ex_ante_payment(dist, M, reserve, quad)


def seller_payoff(dist: ValuationDistribution, M: int, reserve: float, seller_value: float,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Revenue plus ``F(r)**M x_s`` kept when nobody clears the reserve."""
    return expected_revenue(dist, M, reserve, quad) + dist.cdf(reserve) ** M * seller_value


def bid(spec: AuctionSpec, x: float, method: str = "auto", printed_variant: bool = False,
        quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """Dispatch to the right bid routine for ``spec`` and ``method``.

    ``method`` is one of ``auto``, ``closed``, ``quad``, ``approx``.
    """
    dist, r = spec.dist, spec.reserve
    if method == "auto":
        method = "closed" if isinstance(dist, Uniform) else "quad"
    if method == "closed":
        if not isinstance(dist, Uniform):
            raise ValueError("closed form is only available for uniform valuations")
        if r > 0:
            return bid_reserve_uniform(spec.M, r, x, dist.omega, printed_variant)
        return bid_uniform(spec.M, x, dist.omega)
    if method == "quad":
        return bid_reserve_general(spec, x, quad)
    if method == "approx":
        if not isinstance(dist, LogNormal):
            raise ValueError("the approximation applies to log-normal valuations only")
        if r > 0:
            return bid_reserve_lognormal(dist.mu, dist.sigma, spec.M, r, x, printed_variant, quad)
        return bid_lognormal_approx(x, dist, spec.M, quad)
    raise ValueError(f"unknown method {method!r}")
