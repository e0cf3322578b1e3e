"""Uncertain number of bidders: the discrete symmetric (triangular) PMF and
the mixture bid.

The PMF is indexed by the number of RIVALS ``l`` a participant faces, so the
auction has ``l + 1`` bidders in state ``l``. ``p[0]`` is always zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import Uniform, ValuationDistribution
from .equilibrium import AuctionSpec, BidResult, bid_general
from .numerics import DEFAULT_QUAD, QuadratureSpec


def delta_p(M: int) -> Fraction:
    """``1 / floor(M**2 / 4)``."""
    return Fraction(1, (M * M) // 4)


def delta_p_modform(M: int) -> Fraction:
    """The floor/mod rewriting of ``delta_p``, evaluated exactly."""
    half = Fraction(M - 1, 2)
    fl = math.floor(half)
    frac = half - fl  # (M-1)/2 mod 1
    denom = fl * (fl + 1) + (frac + half) * (2 * frac)
    return 1 / Fraction(denom)


def symmetric_weights_exact(M: int) -> list[Fraction]:
    dp = delta_p(M)
    half = Fraction(M - 1, 2)
    return [l * dp if l <= half else (M - l) * dp for l in range(M)]


@dataclass(frozen=True)
class BidderCountPMF:
    """``p[l]`` = probability of facing ``l`` rivals, ``l = 0 .. M-1``."""

    M: int
    p: tuple

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if len(self.p) != self.M:
            raise ValueError(f"need {self.M} probabilities, got {len(self.p)}")
        if any(q < 0 for q in self.p):
            raise ValueError("probabilities must be non-negative")
        total = math.fsum(float(q) for q in self.p)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @property
    def probs(self) -> np.ndarray:
        return np.asarray([float(q) for q in self.p])

    def support(self) -> list[int]:
        return [l for l, q in enumerate(self.p) if q > 0]

    @classmethod
    def degenerate(cls, M: int, rivals: int) -> "BidderCountPMF":
        if not 0 <= rivals < M:
            raise ValueError("rivals must lie in 0..M-1")
        return cls(M, tuple(1.0 if l == rivals else 0.0 for l in range(M)))


def discrete_symmetric_pmf(M: int) -> BidderCountPMF:
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if delta_p(M) != delta_p_modform(M):
        raise ArithmeticError(f"delta_p definitions disagree at M={M}")
    # integer numerators over one denominator: each float is correctly rounded
    # and no Fraction arithmetic is needed on this path
    denom = (M * M) // 4
    half = (M - 1) / 2
    return BidderCountPMF(M, tuple((l if l <= half else M - l) / denom for l in range(M)))


def mixture_weights(pmf: BidderCountPMF, F_x: float) -> np.ndarray:
    """``p_l F(x)**l / sum_k p_k F(x)**k``; zeros when ``F(x) = 0``.

    The common factor ``F(x)**l0`` (``l0`` the smallest rival count with
    positive mass) is divided out first, so a tiny but positive ``F(x)``
    still yields weights that sum to one.
    """
    p = pmf.probs
    if F_x <= 0.0:
        return np.zeros_like(p)
    l0 = pmf.support()[0]
    terms = p * np.power(F_x, np.arange(pmf.M, dtype=float) - l0)
    total = math.fsum(terms)
    if total <= 0.0:
        return np.zeros_like(terms)
    return terms / total


def fixed_count_bid(dist: ValuationDistribution, rivals: int, x: float,
                    quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    if rivals == 0:
        return 0.0  # alone: any non-negative bid wins
    if isinstance(dist, Uniform):
        return rivals / (rivals + 1) * x
    return bid_general(AuctionSpec(rivals + 1, dist), x, quad).bid


def bid_uncertain(pmf: BidderCountPMF, dist: ValuationDistribution, x: float,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> BidResult:
    """Weighted average of the fixed-count bids with weights ``p_l G^l(x) / G(x)``."""
    if not dist.lo <= x <= dist.hi:
        raise ValueError(f"valuation {x} outside support")
    w = mixture_weights(pmf, dist.cdf(x))
    if not w.any():
        return BidResult(0.0, "closed_form" if isinstance(dist, Uniform) else "quadrature", 0.0)
    bids = [fixed_count_bid(dist, l, x, quad) if w[l] > 0 else 0.0 for l in range(pmf.M)]
    value = math.fsum(wl * b for wl, b in zip(w, bids))
    return BidResult(value, "closed_form" if isinstance(dist, Uniform) else "quadrature",
                     0.0 if isinstance(dist, Uniform) else quad.abs_tol)


def bid_uncertain_uniform(pmf: BidderCountPMF, x: float) -> float:
    """Unit-uniform fast path: ``sum_l (p_l x^l / sum_k p_k x^k) (l/(l+1)) x``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("valuation must lie in [0, 1]")
    p = pmf.probs
    l = np.arange(pmf.M, dtype=float)
    powers = p * np.power(x, l)
    denom = math.fsum(powers)
    if denom == 0.0:
        return 0.0
    return math.fsum(powers * (l / (l + 1.0)) * x) / denom
