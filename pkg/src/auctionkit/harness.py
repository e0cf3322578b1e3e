"""Monte Carlo first-price auctions and best-response checks.

Rounds are split into batches; batch ``k`` draws from its own child of
``SeedSequence(seed)``, so a run is reproducible bit for bit and does not
depend on how batches would be distributed over workers. Standard errors
are batch-means standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .distributions import Uniform
from .equilibrium import AuctionSpec, bid_reserve_general
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate

Strategy = Callable[[np.ndarray], np.ndarray]
_BID_SLACK = 1e-12


class DominatedStrategyError(ValueError):
    """A strategy bid more than the valuation."""


@dataclass
class SimulationReport:
    rounds: int
    seed: int
    mean_revenue: float
    revenue_se: float
    mean_payment_per_bidder: float
    win_rate_by_bidder: list
    no_sale_rate: float
    no_sale_se: float
    mean_seller_payoff: float
    batches: int = 100
    backend: str = field(default_factory=_kernels.backend)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _batch_sizes(rounds: int, batches: int) -> list[int]:
    q, r = divmod(rounds, batches)
    return [q + (1 if k < r else 0) for k in range(batches)]


def simulate(spec: AuctionSpec, strategy: Strategy, rounds: int, seed: int = 0,
             batches: int = 100) -> SimulationReport:
    """Play ``rounds`` independent auctions among ``spec.M`` bidders.

    ``strategy`` maps an array of valuations to bids elementwise; ``nan``
    (or anything below the reserve) means the bidder stays out. The highest
    admissible bid wins and pays itself; exact ties go to a uniformly random
    tied bidder.
    """
    if rounds < 100:
        raise ValueError("simulate needs at least 100 rounds")
    if rounds < batches:
        raise ValueError("need at least one round per batch")
    M, r, xs = spec.M, spec.reserve, spec.seller_value
    children = np.random.SeedSequence(seed).spawn(batches)
    rev_means = np.empty(batches)
    nosale_means = np.empty(batches)
    wins = np.zeros(M)
    pay_total = 0.0
    for k, (n, child) in enumerate(zip(_batch_sizes(rounds, batches), children)):
        rng = np.random.default_rng(child)
        values = spec.dist._draw(rng, n * M).reshape(n, M)
        bids = np.asarray(strategy(values), dtype=float).reshape(n, M)
        over = bids > values + _BID_SLACK
        if over.any():
            i, j = np.argwhere(over)[0]
            raise DominatedStrategyError(
                f"strategy bid {bids[i, j]!r} above valuation {values[i, j]!r}")
        bids = np.where(np.isnan(bids), -np.inf, bids)
        winner, price = _kernels.clear_first_price(bids, r, rng.random((n, M)))
        sold = winner >= 0
        rev_means[k] = price.mean()
        nosale_means[k] = 1.0 - sold.mean()
        wins += np.bincount(winner[sold], minlength=M)
        pay_total += price.sum()
    se = lambda a: float(a.std(ddof=1) / math.sqrt(batches))
    weights = np.asarray(_batch_sizes(rounds, batches), dtype=float) / rounds
    mean_rev = float(weights @ rev_means)
    no_sale = float(weights @ nosale_means)
    return SimulationReport(
        rounds=rounds,
        seed=seed,
        mean_revenue=mean_rev,
        revenue_se=se(rev_means),
        mean_payment_per_bidder=pay_total / (rounds * M),
        win_rate_by_bidder=(wins / rounds).tolist(),
        no_sale_rate=no_sale,
        no_sale_se=se(nosale_means),
        mean_seller_payoff=mean_rev + no_sale * xs,
        batches=batches,
    )


def truthful(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float)


def equilibrium_strategy(spec: AuctionSpec, grid: int = 2001,
                         quad: QuadratureSpec = DEFAULT_QUAD) -> Strategy:
    """Vectorised equilibrium bid for ``spec``.

    Uniform valuations use the closed form; other distributions interpolate
    quadrature bids on a grid over ``[r, upper]`` (valuations above the grid
    are clipped to its top, which only matters in a 1e-10 tail). Types below
    the reserve return ``nan``.
    """
    M, r, dist = spec.M, spec.reserve, spec.dist
    if isinstance(dist, Uniform):
        def strat(v):
            v = np.asarray(v, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                b = (M - 1) / M * v + (r ** M / (M * v ** (M - 1)) if r > 0 else 0.0)
            b = np.minimum(b, v)
            return np.where(v >= r, b, np.nan) if r > 0 else b
        return strat
    top = dist.upper(1e-10)
    xs = np.linspace(r, top, grid)
    bs = np.array([bid_reserve_general(spec, float(x), quad).bid for x in xs])

    def strat(v):
        v = np.asarray(v, dtype=float)
        b = np.minimum(np.interp(v, xs, bs), v)
        return np.where(v >= r, b, np.nan) if r > 0 else b
    return strat


@dataclass(frozen=True)
class BestResponseReport:
    x: float
    argmax_z: float
    best_payoff: float
    truthful_payoff: float
    margin: float
    cell: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _payoff(spec: AuctionSpec, x: float, z: float, quad: QuadratureSpec) -> float:
    # pretend to be type z: win with prob G(z), pay beta(z); types below r stay out
    if z < spec.reserve or z <= 0.0:
        return 0.0
    return spec.G(z) * (x - bid_reserve_general(spec, z, quad).bid)


def best_response_scan(spec: AuctionSpec, x: float, grid: int = 101,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> BestResponseReport:
    """Scan ``Pi(beta(z), x) = G(z) (x - beta(z))`` over a uniform ``z`` grid."""
    if grid < 11:
        raise ValueError("grid must have at least 11 points")
    top = spec.dist.upper(1e-10)
    zs = np.linspace(0.0, top, grid)
    pay = np.array([_payoff(spec, x, float(z), quad) for z in zs])
    k = int(np.argmax(pay))
    own = _payoff(spec, x, x, quad)
    return BestResponseReport(x, float(zs[k]), float(pay[k]), own, float(pay[k] - own),
                              float(zs[1] - zs[0]))


def deviation_gap(spec: AuctionSpec, x: float, z: float,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``G(z) (z - x) - int_x^z G``: what type ``x`` loses by mimicking type ``z``.

    Non-negative for either sign of ``z - x`` when ``G`` is non-decreasing.
    """
    return spec.G(z) * (z - x) - integrate(spec.G, x, z, quad)
