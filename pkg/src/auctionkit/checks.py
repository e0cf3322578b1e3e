"""A quick invariant suite behind ``auctionkit check``.

Each check returns ``(name, ok, detail)``. The suite is deliberately small
(a few seconds); the full property tests live in the test-suite.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .asymmetric import TwoGroupSpec, bid_asymmetric, solve_two_group
from .bidder_count import delta_p, delta_p_modform, discrete_symmetric_pmf
from .distributions import LogNormal, Uniform
from .equilibrium import AuctionSpec, bid_general, bid_reserve_general, bid_reserve_uniform, bid_uniform, optimal_reserve
from .interdependent import InterdepSpec, bid_combined, bid_interdependent, bid_irwinhall_closed, x_star


def _uniform_closed_vs_quadrature():
    worst = 0.0
    for M in (2, 3, 5, 10):
        spec = AuctionSpec(M, Uniform(1.0))
        for x in np.linspace(0.0, 1.0, 50):
            worst = max(worst, abs(bid_uniform(M, x).bid - bid_general(spec, float(x)).bid))
    return worst <= 1e-6, f"max gap {worst:.3g}"


def _reserve_boundary():
    worst = 0.0
    for M, r in ((2, 0.3), (4, 0.7), (7, 0.1)):
        worst = max(worst, abs(bid_reserve_uniform(M, r, r).bid - r))
        spec = AuctionSpec(M, LogNormal(0.0, 0.5), reserve=r)
        worst = max(worst, abs(bid_reserve_general(spec, r).bid - r))
    return worst <= 1e-8, f"max |beta(r) - r| {worst:.3g}"


def _optimal_reserve():
    a = optimal_reserve(Uniform(1.0), 0.0)
    b = optimal_reserve(Uniform(1.0), 0.5)
    return abs(a - 0.5) <= 1e-9 and abs(b - 0.75) <= 1e-9, f"r*={a:.12g}, {b:.12g}"


def _pmf():
    bad = [M for M in range(2, 200) if delta_p(M) != delta_p_modform(M)
           or abs(math.fsum(discrete_symmetric_pmf(M).p) - 1.0) > 1e-12]
    return not bad, "ok" if not bad else f"bad M: {bad[:5]}"


def _interdependent():
    worst = 0.0
    for M in (2, 5):
        spec = InterdepSpec(M, 0.5, 0.5)
        for x in np.linspace(0.0, 2.0, 11):
            worst = max(worst, abs(bid_irwinhall_closed(spec, float(x)).bid - bid_interdependent(spec, float(x)).bid))
    spec = InterdepSpec(2, 0.5, 0.5, 5.0 / 6.0)
    xs = x_star(spec)
    edge = abs(bid_combined(spec, xs).bid - spec.reserve)
    return worst <= 1e-6 and edge <= 1e-8 and abs(xs - 1.0) <= 1e-8, \
        f"closed vs quadrature {worst:.3g}, x*={xs:.12g}"


def _asymmetric():
    spec = TwoGroupSpec(Uniform(1.0), Uniform(1.0), 0, 2)
    table = solve_two_group(spec)
    worst = max(abs(bid_asymmetric(table, g, float(x)).bid - 0.5 * x)
                for g in (1, 2) for x in np.linspace(0.0, 1.0, 41))
    return worst <= 1e-4, f"symmetric sup error {worst:.3g}"


CHECKS: dict[str, Callable[[], tuple]] = {
    "uniform_closed_vs_quadrature": _uniform_closed_vs_quadrature,
    "reserve_boundary": _reserve_boundary,
    "optimal_reserve": _optimal_reserve,
    "symmetric_pmf": _pmf,
    "interdependent": _interdependent,
    "asymmetric_symmetric_reduction": _asymmetric,
}


def run_checks() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
