"""Quadrature, bracketed root finding and a fixed-step RK4 integrator.

Everything in here works on plain Python callables; the batched hot paths
live in :mod:`auctionkit._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class NumericalError(RuntimeError):
    """Base class for failures of the numerical substrate."""


class QuadratureError(NumericalError):
    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate!r}, error_bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


class RootFindingError(NumericalError):
    pass


class ODEError(NumericalError):
    def __init__(self, message: str, at: float):
        super().__init__(f"{message} at b={at!r}")
        self.at = at


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 50
    fallback_panels: int = 4096

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.fallback_panels < 64:
            raise ValueError("fallback_panels must be >= 64")


@dataclass(frozen=True)
class RootSpec:
    bracket: tuple[float, float]
    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        a, b = self.bracket
        if not a < b:
            raise ValueError(f"root bracket must satisfy a < b, got {self.bracket}")
        if self.tol <= 0:
            raise ValueError("root tolerance must be positive")


DEFAULT_QUAD = QuadratureSpec()


def _finite_at(f, x, toward):
    # Open-rule fallback for endpoint singularities: nudge inward.
    y = f(x)
    if math.isfinite(y):
        return y
    eps = 1e-12 * max(1.0, abs(toward - x))
    y = f(x + math.copysign(eps, toward - x))
    if not math.isfinite(y):
        raise QuadratureError("integrand not finite near endpoint", math.nan, math.inf)
    return y


def integrate(f: Callable[[float], float], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    Each panel is accepted once the Richardson error estimate
    ``|S2 - S1| / 15`` is under its share of the global tolerance, which is
    ``max(abs_tol, rel_tol * |I|)`` with ``I`` the 16-panel starting estimate.
    Raises :class:`QuadratureError` when the panels stopped at ``max_depth``
    carry more than that tolerance in total.
    """
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, spec)

    fa = _finite_at(f, a, b)
    fb = _finite_at(f, b, a)
    # Start from 16 Simpson panels rather than one: a single 3-point rule can
    # see a peaked integrand as flat and accept it immediately. The same
    # points give the coarse estimate that scales the relative tolerance.
    panels = 16
    xs = np.linspace(a, b, 2 * panels + 1).tolist()
    ys = [fa] + [f(x) for x in xs[1:-1]] + [fb]
    pieces = [(xs[2 * i], xs[2 * i + 2], ys[2 * i], ys[2 * i + 1], ys[2 * i + 2]) for i in range(panels)]
    sums = [(hi - lo) * (flo + 4.0 * fm + fhi) / 6.0 for lo, hi, flo, fm, fhi in pieces]
    coarse = math.fsum(sums)
    tol = max(spec.abs_tol, spec.rel_tol * abs(coarse))

    total = 0.0
    err_total = 0.0
    forced = 0.0  # error left on panels cut off by max_depth
    stack = [(lo, hi, flo, fm, fhi, sm, tol / panels, 0)
             for (lo, hi, flo, fm, fhi), sm in zip(reversed(pieces), reversed(sums))]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = f(lm)
        frm = f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        s2 = left + right
        delta = s2 - s
        if not math.isfinite(delta):
            raise QuadratureError("integrand returned a non-finite value", total, math.inf)
        if abs(delta) <= 15.0 * eps or depth >= spec.max_depth or hi - lo <= 4e-15 * (b - a):
            if abs(delta) > 15.0 * eps:
                forced += abs(delta) / 15.0
            total += s2 + delta / 15.0
            err_total += abs(delta) / 15.0
            continue
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    # Panels at the depth cap may overshoot their (halved) share; that is
    # only a failure if their combined error breaks the global tolerance.
    if forced > tol:
        raise QuadratureError("adaptive Simpson did not converge within max_depth", total, err_total)
    return total


def integrate_pieces(f, knots: Sequence[float], spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integrate over consecutive knot intervals (for kinked integrands)."""
    return math.fsum(integrate(f, lo, hi, spec) for lo, hi in zip(knots[:-1], knots[1:]) if hi > lo)


def riemann_sum(f, a: float, b: float, panels: int = DEFAULT_QUAD.fallback_panels,
                vectorized: bool = False) -> float:
    """Midpoint Riemann sum; first-order cross-check, never the default.

    With ``vectorized=True`` ``f`` receives the whole array of midpoints.
    """
    if panels < 1:
        raise ValueError("panels must be positive")
    if a == b:
        return 0.0
    h = (b - a) / panels
    mids = a + h * (np.arange(panels) + 0.5)
    if vectorized:
        vals = np.asarray(f(mids), dtype=float)
    else:
        vals = np.fromiter((f(float(t)) for t in mids), dtype=float, count=panels)
    return float(h * math.fsum(vals))


def find_root(f: Callable[[float], float], spec: RootSpec) -> float:
    """Bracketed root by bisection with Illinois-style secant steps.

    Every iteration keeps a sign-changing bracket, so convergence is
    guaranteed; the secant proposal is only taken when it lands strictly
    inside the bracket.
    """
    a, b = spec.bracket
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not (math.isfinite(fa) and math.isfinite(fb)) or fa * fb > 0:
        raise RootFindingError(
            f"no sign change on [{a!r}, {b!r}]: f(a)={fa!r}, f(b)={fb!r}"
        )
    # Orient so that f(lo) < 0 < f(hi); result must not depend on this.
    if fa > 0:
        a, b, fa, fb = b, a, fb, fa
    lo, hi, flo, fhi = a, b, fa, fb
    side = 0
    x = 0.5 * (lo + hi)
    for it in range(spec.max_iter):
        width = abs(hi - lo)
        if width <= spec.tol:
            return 0.5 * (lo + hi)
        x = hi - fhi * (hi - lo) / (fhi - flo) if fhi != flo else 0.5 * (lo + hi)
        inner = min(lo, hi) + 0.05 * width, max(lo, hi) - 0.05 * width
        if not (inner[0] < x < inner[1]) or it % 3 == 2:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if not math.isfinite(fx):
            raise RootFindingError(f"f returned {fx!r} at x={x!r}")
        if abs(fx) <= spec.tol * 1e-3 or fx == 0.0:
            return x
        if fx < 0:
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
    raise RootFindingError(f"no convergence after {spec.max_iter} iterations; last x={x!r}")


def rk4_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_ode(rhs: Callable[[float, np.ndarray], np.ndarray], t0: float, t1: float,
                  initial, steps: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4 from ``t0`` to ``t1`` (either direction).

    Returns ``(ts, ys)`` with ``ys[i]`` the state at ``ts[i]``; both endpoints
    are included.
    """
    if steps < 16:
        raise ValueError("steps must be >= 16")
    y = np.atleast_1d(np.asarray(initial, dtype=float)).copy()
    ts = np.linspace(t0, t1, steps + 1)
    ys = np.empty((steps + 1, y.size))
    ys[0] = y
    h = (t1 - t0) / steps

    def checked(t, state):
        d = np.asarray(rhs(t, state), dtype=float)
        if not np.all(np.isfinite(d)):
            raise ODEError("right-hand side returned a non-finite value", t)
        return d

    for i in range(steps):
        y = rk4_step(checked, ts[i], y, h)
        ys[i + 1] = y
    return ts, ys
