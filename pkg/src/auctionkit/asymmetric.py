"""Two-group asymmetric first-price equilibrium via backward shooting.

Group 1 has ``K + 1`` bidders with ``F1``; group 2 has ``M - K - 1`` with
``F2``. Writing the first-order condition once for a group-1 bidder and once
for a group-2 bidder gives, with ``u_i = f_i(phi_i) phi_i' / F_i(phi_i)``::

    K u1       + (M-1-K) u2 = 1 / (phi1 - b)
    (K+1) u1   + (M-2-K) u2 = 1 / (phi2 - b)

The matrix has determinant ``1 - M`` so it is never singular; the system
only degenerates where ``phi_i(b) = b``. The common top bid ``b_bar`` is found
by bisection: too high and some ``phi_i`` crosses the diagonal before ``b``
reaches zero, too low and both stay strictly above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import ValuationDistribution
from .equilibrium import BidResult
from .numerics import NumericalError


class ShootingError(NumericalError):
    pass


@dataclass(frozen=True)
class TwoGroupSpec:
    F1: ValuationDistribution
    F2: ValuationDistribution
    K: int
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if not 0 <= self.K <= self.M - 1:
            raise ValueError(f"K must lie in 0..M-1, got {self.K}")
        for F in (self.F1, self.F2):
            if not math.isfinite(F.hi) or F.lo != 0.0:
                raise ValueError("group distributions need bounded supports [0, omega]")

    @property
    def sizes(self) -> tuple[int, int]:
        return self.K + 1, self.M - self.K - 1

    @property
    def single_group(self) -> bool:
        return self.sizes[1] == 0


@dataclass(frozen=True)
class InverseBidTable:
    """Inverse bids on an increasing grid of bid levels ending at ``b_bar``."""

    b: np.ndarray
    phi1: np.ndarray
    phi2: Optional[np.ndarray]
    b_bar: float
    omega1: float
    omega2: float

    def phi(self, group: int) -> np.ndarray:
        if group == 1:
            return self.phi1
        if group == 2 and self.phi2 is not None:
            return self.phi2
        raise ValueError(f"no inverse-bid column for group {group}")

    def rows(self):
        phi2 = self.phi2 if self.phi2 is not None else np.full_like(self.phi1, np.nan)
        return zip(self.b, self.phi1, phi2)


def _ratio(F: ValuationDistribution, v: float) -> float:
    # F(v) / f(v), the reciprocal reverse hazard
    dens = F.pdf(v)
    return F.cdf(v) / dens if dens > 0 else math.inf


def _make_rhs(spec: TwoGroupSpec):
    """Scalar right-hand side ``(b, phi1, phi2) -> (phi1', phi2')``."""
    K, M = spec.K, spec.M
    F1, F2 = spec.F1, spec.F2
    if spec.single_group:
        def rhs(b, p1, p2):
            d = _ratio(F1, p1) / ((M - 1) * (p1 - b))
            return d, d
        return rhs

    a11, a12 = K, M - 1 - K
    a21, a22 = K + 1, M - 2 - K
    det = a11 * a22 - a12 * a21  # == 1 - M

    def rhs(b, p1, p2):
        r1 = 1.0 / (p1 - b)
        r2 = 1.0 / (p2 - b)
        u1 = (a22 * r1 - a12 * r2) / det
        u2 = (-a21 * r1 + a11 * r2) / det
        return u1 * _ratio(F1, p1), u2 * _ratio(F2, p2)

    return rhs


def _bid_grid(b_bar: float, b_end_frac: float, per_decade: int) -> list:
    # geometric in b: the dynamics near 0 scale with b itself
    steps = max(16, int(round(per_decade * math.log10(1.0 / b_end_frac))))
    return (b_bar * np.exp(np.linspace(0.0, math.log(b_end_frac), steps + 1))).tolist()


def _shoot(spec: TwoGroupSpec, b_bar: float, b_end_frac: float, per_decade: int):
    """Integrate backward from ``b_bar`` with RK4 on a geometric grid.

    Returns ``(sign, grid, phi1, phi2)`` where ``sign`` is +1 if a trajectory
    reaches the diagonal ``phi = b`` (``b_bar`` too high) and -1 otherwise.
    The lists stop at the last admissible point.
    """
    rhs = _make_rhs(spec)
    w1 = spec.F1.hi
    w2 = w1 if spec.single_group else spec.F2.hi
    grid = _bid_grid(b_bar, b_end_frac, per_decade)
    p1, p2 = w1, w2
    p1s, p2s = [p1], [p2]
    sign = -1
    for i in range(len(grid) - 1):
        b = grid[i]
        bn = grid[i + 1]
        h = bn - b
        bm = b + 0.5 * h
        try:
            k1a, k1b = rhs(b, p1, p2)
            s1, s2 = p1 + 0.5 * h * k1a, p2 + 0.5 * h * k1b
            if not (s1 > bm and s2 > bm):
                sign = 1
                break
            k2a, k2b = rhs(bm, s1, s2)
            s1, s2 = p1 + 0.5 * h * k2a, p2 + 0.5 * h * k2b
            if not (s1 > bm and s2 > bm):
                sign = 1
                break
            k3a, k3b = rhs(bm, s1, s2)
            s1, s2 = p1 + h * k3a, p2 + h * k3b
            if not (s1 > bn and s2 > bn):
                sign = 1
                break
            k4a, k4b = rhs(bn, s1, s2)
        except ZeroDivisionError:
            sign = 1
            break
        n1 = p1 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        n2 = p2 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        if not (n1 - bn > 0.0 and n2 - bn > 0.0):  # also catches nan
            sign = 1
            break
        if n1 > w1 or n2 > w2:
            break
        p1, p2 = n1, n2
        p1s.append(p1)
        p2s.append(p2)
    n = len(p1s)
    return sign, np.asarray(grid[:n]), np.asarray(p1s), np.asarray(p2s)


def solve_two_group(spec: TwoGroupSpec, steps: Optional[int] = None, per_decade: int = 400,
                    table_floor: float = 1e-3, shoot_floor: float = 1e-9, tol: float = 2e-16,
                    max_iter: int = 200, divergence_tol: float = 1e-10) -> InverseBidTable:
    """Solve for the inverse bid functions on ``[0, b_bar]``.

    ``b_bar`` is bisected until the bracket is ``tol`` wide (relative), with
    each shot integrated down to ``shoot_floor * b_bar``. The table keeps the
    rows above ``table_floor * b_bar`` on which the two bracketing
    trajectories agree within ``divergence_tol`` (relative to the smaller
    support), and is closed with the zero-profit boundary ``phi_i(0) = 0``.

    ``steps``, when given, is the total number of RK4 steps per shot and
    overrides ``per_decade``.
    """
    if steps is not None:
        if steps < 16:
            raise ValueError("steps must be >= 16")
        per_decade = max(2, round(steps / math.log10(1.0 / shoot_floor)))
    if not 0 < shoot_floor <= table_floor < 1:
        raise ValueError("need 0 < shoot_floor <= table_floor < 1")
    top = spec.F1.hi if spec.single_group else min(spec.F1.hi, spec.F2.hi)
    hi = top * (1.0 - 1e-12)
    lo = 1e-6 * top
    if _shoot(spec, hi, shoot_floor, per_decade)[0] != 1:
        raise ShootingError("upper shooting bound does not overshoot; cannot bracket b_bar")
    low_run = _shoot(spec, lo, shoot_floor, per_decade)
    if low_run[0] != -1:
        raise ShootingError(
            "lower shooting bound does not undershoot; cannot bracket b_bar "
            "(no equilibrium with a common top bid for this specification?)")
    high_run = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * hi or mid in (lo, hi):
            break
        run = _shoot(spec, mid, shoot_floor, per_decade)
        if run[0] > 0:
            hi, high_run = mid, run
        else:
            lo, low_run = mid, run
    else:
        raise ShootingError("bisection on b_bar did not converge")
    if high_run is None:
        high_run = _shoot(spec, hi, shoot_floor, per_decade)
    _, grid, p1, p2 = low_run
    _, _, q1, q2 = high_run
    n = min(len(grid), len(q1))
    n = min(n, int(np.searchsorted(-grid, -table_floor * lo, side="right")))
    gap = np.maximum(np.abs(p1[:n] - q1[:n]), np.abs(p2[:n] - q2[:n]))
    bad = np.nonzero(gap > divergence_tol * top)[0]
    keep = n if bad.size == 0 else int(bad[0])
    if keep < 16:
        raise ShootingError("bracketing trajectories diverge immediately; b_bar is ill-determined")
    grid, p1, p2 = grid[:keep], p1[:keep], p2[:keep]
    b = np.concatenate(([0.0], grid[::-1]))
    phi1 = np.concatenate(([0.0], p1[::-1]))
    phi2 = np.concatenate(([0.0], p2[::-1]))
    return InverseBidTable(
        b=b,
        phi1=phi1,
        phi2=None if spec.single_group else phi2,
        b_bar=lo,
        omega1=spec.F1.hi,
        omega2=spec.F2.hi,
    )


def bid_asymmetric(table: InverseBidTable, group: int, x: float) -> BidResult:
    """Invert ``phi_group`` by monotone (linear) interpolation."""
    phi = table.phi(group)
    omega = table.omega1 if group == 1 else table.omega2
    if x > omega or x < 0:
        raise ValueError(f"valuation {x} outside [0, {omega}] for group {group}")
    bid = float(np.interp(x, phi, table.b))
    return BidResult(min(bid, x), "quadrature", None)


def _log_grid_derivative(b: np.ndarray, phi: np.ndarray) -> np.ndarray:
    # five-point central difference in u = log b (the solver's grid is uniform in u)
    u = np.log(b)
    du = np.diff(u)
    if not np.allclose(du, du[0], rtol=1e-6, atol=0.0):
        raise ValueError("residual check expects the solver's geometric bid grid")
    h = du.mean()
    d = (phi[:-4] - 8.0 * phi[1:-3] + 8.0 * phi[3:-1] - phi[4:]) / (12.0 * h)
    return d / b[2:-2]


def two_group_residuals(spec: TwoGroupSpec, table: InverseBidTable) -> np.ndarray:
    """Plug the table back into both group conditions.

    Derivatives come from a five-point stencil on the table itself (not from
    the solver's right-hand side), so the residual measures how well the
    tabulated functions satisfy the system. Returns shape ``(n, groups)``
    over the interior rows.
    """
    b = table.b[1:]  # drop the (0, 0) closure row
    phis = [table.phi1[1:]] if spec.single_group else [table.phi1[1:], table.phi2[1:]]
    dists = [spec.F1] if spec.single_group else [spec.F1, spec.F2]
    bi = b[2:-2]
    us = []
    for F, phi in zip(dists, phis):
        v = phi[2:-2]
        us.append(F.pdf_array(v) * _log_grid_derivative(b, phi) / F.cdf_array(v))
    K, M = spec.K, spec.M
    if spec.single_group:
        return ((M - 1) * us[0] - 1.0 / (phis[0][2:-2] - bi))[:, None]
    r1 = K * us[0] + (M - 1 - K) * us[1] - 1.0 / (phis[0][2:-2] - bi)
    r2 = (K + 1) * us[0] + (M - 2 - K) * us[1] - 1.0 / (phis[1][2:-2] - bi)
    return np.column_stack((r1, r2))


def asymmetric_residuals(dists: Sequence[ValuationDistribution], phis: Sequence, dphis: Sequence,
                         b: float) -> np.ndarray:
    """Residuals of the fully asymmetric M-bidder first-order system at ``b``.

    ``phis[j]`` and ``dphis[j]`` are bidder ``j``'s inverse bid and its
    derivative at ``b``. Entry ``i`` is
    ``sum_{j != i} f_j(phi_j) phi_j' / F_j(phi_j) - 1 / (phi_i - b)``.
    Checker only; there is no M-group solver.
    """
    terms = np.array([F.pdf(p) * d / F.cdf(p) for F, p, d in zip(dists, phis, dphis)])
    total = terms.sum()
    return np.array([total - terms[i] - 1.0 / (phis[i] - b) for i in range(len(dists))])
