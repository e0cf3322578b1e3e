"""Interdependent values with Irwin-Hall signals.

Each bidder's signal is the sum of two independent standard uniforms, so the
signals follow the Irwin-Hall(2) law on ``[0, 2]`` with CDF ``F``. A bidder
with signal ``x`` facing a highest rival signal ``y`` values the object at
``v(x, y) = alpha x + xi y``. The symmetric equilibrium bid is

    beta(x) = int_0^x v(y, y) dL(y | x),   L(y | x) = exp(-int_y^x rho(t) dt)

with reverse hazard ``rho(t) = (M - 1) f(t) / F(t)``, which makes
``L(y | x) = (F(y) / F(x))**(M-1)`` on the whole square.

With a reserve ``r`` only signals above the screening level ``x*(r)`` bid;
``x*`` solves ``E[v(x, Y1) | Y1 < x] = r`` and the bid starts from
``beta(x*) = r``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .bidder_count import BidderCountPMF, mixture_weights
from .distributions import IrwinHall2
from .equilibrium import BelowReserveError, BidResult
from .numerics import DEFAULT_QUAD, QuadratureSpec, RootSpec, find_root, integrate, integrate_pieces

SIGNAL = IrwinHall2()
_EDGE = 1e-8


@dataclass(frozen=True)
class InterdepSpec:
    M: int
    alpha: float = 0.5
    xi: float = 0.5
    reserve: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M}")
        for name in ("alpha", "xi"):
            w = getattr(self, name)
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {w}")
        if self.reserve < 0:
            raise ValueError("reserve must be non-negative")

    def value(self, x: float, y: float) -> float:
        return self.alpha * x + self.xi * y

    def with_bidders(self, M: int) -> "InterdepSpec":
        return InterdepSpec(M, self.alpha, self.xi, self.reserve)


def _check_signal(x: float):
    if not 0.0 <= x <= 2.0 or math.isnan(x):
        raise ValueError(f"signal {x} outside [0, 2]")


def _knots(lo: float, hi: float) -> list[float]:
    return [lo, 1.0, hi] if lo < 1.0 < hi else [lo, hi]


def reverse_hazard(M: int, t: float) -> float:
    """``rho(t) = (M-1) f(t) / F(t)`` for the Irwin-Hall(2) signal."""
    if t <= 0.0:
        raise ValueError(f"reverse hazard diverges at t={t}; need t > 0")
    if t > 2.0:
        raise ValueError(f"t={t} outside the signal support (0, 2]")
    if t < 1.0:
        return (M - 1) * 2.0 / t
    return (M - 1) * (2.0 - t) / (2.0 * t - 1.0 - 0.5 * t * t)


def L_weight(M: int, y: float, x: float) -> float:
    """Equilibrium weight ``L(y | x)``; a CDF in ``y`` on ``[0, x]``."""
    if y > x:
        raise ValueError(f"L(y|x) needs y <= x, got y={y}, x={x}")
    _check_signal(x)
    if y <= 0.0:
        return 0.0
    if y == x:
        return 1.0
    if x <= 1.0:
        return (y / x) ** (2 * M - 2)
    return (SIGNAL.cdf(y) / SIGNAL.cdf(x)) ** (M - 1)


def L_weight_quadrature(M: int, y: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``exp(-int_y^x rho)`` evaluated numerically; an oracle for :func:`L_weight`."""
    if y > x:
        raise ValueError(f"L(y|x) needs y <= x, got y={y}, x={x}")
    if y <= 0.0:
        return 0.0
    return math.exp(-integrate_pieces(lambda t: reverse_hazard(M, t), _knots(y, x), quad))


def _cdf_ratio(y: float, x: float, Fx: float) -> float:
    # F(y) / F(x) for y <= x; below the knot F = t^2/2, so use (y/x)^2 and
    # never divide by an F(x) that may have underflowed
    if x <= 1.0:
        return (y / x) ** 2
    return SIGNAL.cdf(y) / Fx


def _dL(M: int, y: float, x: float, Fx: float) -> float:
    # d/dy L(y|x) = rho(y) L(y|x), written without the 1/y factor so y -> 0 is harmless
    if x <= 1.0:
        return 2.0 * (M - 1) / x * (y / x) ** (2 * M - 3)
    return (M - 1) * SIGNAL.pdf(y) / Fx * _cdf_ratio(y, x, Fx) ** (M - 2)


def rival_conditional_mean(M: int, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``E[Y1 | Y1 < x]`` for the highest of ``M - 1`` rival signals."""
    _check_signal(x)
    if x == 0.0:
        return 0.0
    Fx = SIGNAL.cdf(x)
    n = M - 1
    return x - integrate_pieces(lambda y: _cdf_ratio(y, x, Fx) ** n, _knots(0.0, x), quad)


def conditional_value(spec: InterdepSpec, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``E[v(x, Y1) | Y1 < x]``: what a bidder who just wins expects the object to be worth."""
    return spec.alpha * x + spec.xi * rival_conditional_mean(spec.M, x, quad)


def bid_interdependent(spec: InterdepSpec, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """Quadrature of ``int_0^x v(y, y) rho(y) L(y | x) dy`` (no reserve)."""
    _check_signal(x)
    if x == 0.0:
        return BidResult(0.0, "quadrature", 0.0)
    w = spec.alpha + spec.xi
    M = spec.M
    if x <= 1.0:
        # substitute y = x s: the weight no longer depends on x, and tiny x cannot overflow
        val = x * integrate(lambda s: w * s * _dL(M, s, 1.0, 0.5), 0.0, 1.0, quad)
    else:
        Fx = SIGNAL.cdf(x)
        val = integrate_pieces(lambda y: w * y * _dL(M, y, x, Fx), _knots(0.0, x), quad)
    return BidResult(val, "quadrature", max(quad.abs_tol, quad.rel_tol * abs(val)))


def irwinhall_power_integral(k: int, x: float) -> float:
    """``I_k(x) = int_1^x Q(y)**k dy`` with ``Q(y) = 2y - 1 - y**2/2``, by reduction.

    ``Q`` is the quadratic ``a y^2 + b y + c`` with ``a = -1/2, b = 2, c = -1``
    (so ``4ac - b^2 = -2``). Integrating ``d/dy[(2ay + b) Q^k]`` gives the
    forward recurrence

        (2k + 1) I_k = 2**-k - (2 - x) Q(x)**k + 2k I_{k-1},   I_0 = x - 1.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    if not 1.0 <= x <= 2.0:
        raise ValueError(f"x={x} outside [1, 2]")
    q = 2.0 * x - 1.0 - 0.5 * x * x
    I = x - 1.0
    qk = 1.0
    for j in range(1, k + 1):
        qk *= q
        I = (0.5 ** j - (2.0 - x) * qk + 2.0 * j * I) / (2 * j + 1)
    return I


def irwinhall_power_integral_quad(k: int, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return integrate(lambda y: (2.0 * y - 1.0 - 0.5 * y * y) ** k, 1.0, x, quad)


def bid_irwinhall_closed(spec: InterdepSpec, x: float, printed_variant: bool = False,
                         check_tol: float = 1e-9) -> BidResult:
    """Closed-form interdependent bid for Irwin-Hall(2) signals.

    Below the knot the bid is linear, ``2 (alpha+xi) (M-1) x / (2M-1)``. Above
    it::

        (alpha+xi) [ 2(M-1) / ((2M-1) (2F(x))**(M-1))
                     + x - F(x)**(1-M) (2**(1-M) + int_1^x F**(M-1)) ]

    ``printed_variant=True`` uses ``x**(2M-2)`` in place of ``(2F(x))**(M-1)``
    in the first term. The two agree only at ``x = 1``; the literal variant
    is kept for comparison and does not match the quadrature bid above the
    knot.

    The inner integral comes from the reduction recurrence and is checked
    against adaptive quadrature to ``check_tol``.
    """
    _check_signal(x)
    M = spec.M
    w = spec.alpha + spec.xi
    if x < 1.0:
        return BidResult(2.0 * w * (M - 1) * x / (2 * M - 1), "closed_form", 0.0)
    Fx = SIGNAL.cdf(x)
    inner = irwinhall_power_integral(M - 1, x)
    check = irwinhall_power_integral_quad(M - 1, x)
    if abs(inner - check) > check_tol:
        raise ArithmeticError(f"reduction recurrence and quadrature disagree: {inner!r} vs {check!r}")
    lead_den = x ** (2 * M - 2) if printed_variant else (2.0 * Fx) ** (M - 1)
    lead = 2.0 * (M - 1) / ((2 * M - 1) * lead_den)
    tail = x - (0.5 ** (M - 1) + inner) / Fx ** (M - 1)
    return BidResult(w * (lead + tail), "closed_form", abs(inner - check))


@functools.lru_cache(maxsize=256)
def _value_range(M: int, alpha: float, xi: float) -> tuple[float, float]:
    spec = InterdepSpec(M, alpha, xi)
    return conditional_value(spec, _EDGE), conditional_value(spec, 2.0 - _EDGE)


@functools.lru_cache(maxsize=256)
def x_star(spec: InterdepSpec, tol: float = 1e-13) -> float:
    """Screening level: the signal at which ``E[v(x, Y1) | Y1 < x]`` reaches the reserve."""
    r = spec.reserve
    if r <= 0.0:
        return 0.0
    lo, hi = _value_range(spec.M, spec.alpha, spec.xi)
    if not lo <= r <= hi:
        raise ValueError(f"reserve {r} outside the achievable range [{lo:.12g}, {hi:.12g}] "
                         f"of E[v | win] for M={spec.M}, alpha={spec.alpha}, xi={spec.xi}")
    return find_root(lambda x: conditional_value(spec, x) - r,
                     RootSpec((_EDGE, 2.0 - _EDGE), tol=tol))


def bid_combined(spec: InterdepSpec, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """``r L(x* | x) + int_{x*}^x v(y, y) dL(y | x)`` for ``x >= x*``."""
    _check_signal(x)
    if spec.reserve <= 0.0:
        return bid_interdependent(spec, x, quad)
    xs = x_star(spec)
    if x < xs:
        raise BelowReserveError(f"signal {x} below the screening level x*={xs:.12g}: no bid")
    r = spec.reserve
    if x == xs:
        return BidResult(r, "quadrature", 0.0)
    M = spec.M
    w = spec.alpha + spec.xi
    Fx = SIGNAL.cdf(x)
    body = integrate_pieces(lambda y: w * y * _dL(M, y, x, Fx), _knots(xs, x), quad)
    val = r * L_weight(M, xs, x) + body
    return BidResult(val, "quadrature", max(quad.abs_tol, quad.rel_tol * abs(val)))


def bid_combined_uncertain(pmf: BidderCountPMF, spec: InterdepSpec, x: float,
                           quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """Mixture of per-count combined bids with weights ``p_l F(x)**l / sum``.

    ``l`` is the number of rivals. A bidder who participates never bids below
    the reserve, so a count whose screening level ``x*`` lies above ``x`` (or
    whose reserve is out of reach) contributes ``r``; since every per-count
    bid equals ``r`` at its own ``x*``, the mixture stays continuous as
    counts switch on. A bidder facing no rivals pays the reserve. If no count
    admits ``x`` the bidder stays out and the bid is 0.
    """
    w = mixture_weights_at(pmf, x)
    r = spec.reserve
    bids = np.full(pmf.M, r)
    active = False
    for l in range(pmf.M):
        if w[l] <= 0.0:
            continue
        if l == 0:
            active = True
            continue
        try:
            bids[l] = bid_combined(spec.with_bidders(l + 1), x, quad).bid
        except (BelowReserveError, ValueError):
            continue
        active = True
    if not active:
        return BidResult(0.0, "quadrature", 0.0)
    return BidResult(math.fsum(w * bids), "quadrature", quad.abs_tol)


def mixture_weights_at(pmf: BidderCountPMF, x: float):
    """Weights ``p_l F(x)**l / sum_k p_k F(x)**k`` at signal ``x``.

    For ``x > 0`` so small that ``F(x)`` underflows, the weights take their
    limit: all mass on the smallest rival count in the support.
    """
    _check_signal(x)
    Fx = SIGNAL.cdf(x)
    if Fx == 0.0 and x > 0.0:
        w = np.zeros(pmf.M)
        w[pmf.support()[0]] = 1.0
        return w
    return mixture_weights(pmf, Fx)
