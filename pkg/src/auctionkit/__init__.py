"""Equilibrium bidding in first-price sealed-bid auctions."""

__version__ = "0.1.0"

from .distributions import FoldedNormal, IrwinHall2, LogNormal, Uniform, from_dict, order_stat
from .equilibrium import (
    AuctionSpec,
    BelowReserveError,
    BidResult,
    bid,
    bid_general,
    bid_reserve_general,
    bid_uniform,
    expected_revenue,
    optimal_reserve,
)
from .numerics import NumericalError, QuadratureError, QuadratureSpec, RootFindingError

__all__ = [
    "AuctionSpec",
    "BelowReserveError",
    "BidResult",
    "FoldedNormal",
    "IrwinHall2",
    "LogNormal",
    "NumericalError",
    "QuadratureError",
    "QuadratureSpec",
    "RootFindingError",
    "Uniform",
    "bid",
    "bid_general",
    "bid_reserve_general",
    "bid_uniform",
    "expected_revenue",
    "from_dict",
    "optimal_reserve",
    "order_stat",
]
