"""Valuation distributions and the highest-rival order statistic.

Scalar ``cdf``/``pdf`` methods use :mod:`math` because they sit inside
quadrature loops; the ``*_array`` variants are the vectorised numpy versions
used by sampling, Monte Carlo and the design-table kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import ClassVar

import numpy as np
from scipy import special

from .numerics import RootSpec, find_root

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_STD_NORMAL = NormalDist()


def norm_cdf(z: float) -> float:
    """Standard normal CDF through ``erfc`` (no cancellation in either tail)."""
    return 0.5 * math.erfc(-z / _SQRT2)


def norm_pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


class ValuationDistribution:
    kind: ClassVar[str] = ""
    lo: float = 0.0

    @property
    def hi(self) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def pdf(self, x: float) -> float:
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def logcdf(self, x: float) -> float:
        F = self.cdf(x)
        return math.log(F) if F > 0.0 else -math.inf

    def cdf_array(self, x) -> np.ndarray:
        return np.vectorize(self.cdf, otypes=[float])(x)

    def pdf_array(self, x) -> np.ndarray:
        return np.vectorize(self.pdf, otypes=[float])(x)

    def sample(self, seed: int, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        return self._draw(np.random.default_rng(seed), n)

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray([self.quantile(u) for u in rng.random(n)])

    def upper(self, tail: float = 1e-10) -> float:
        """Upper integration limit: ``hi`` if finite else the ``1 - tail`` quantile."""
        return self.hi if math.isfinite(self.hi) else self.quantile(1.0 - tail)

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params()}


@dataclass(frozen=True)
class Uniform(ValuationDistribution):
    omega: float = 1.0
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"Uniform requires omega > 0, got {self.omega}")

    @property
    def hi(self):
        return self.omega

    def cdf(self, x):
        return min(max(x / self.omega, 0.0), 1.0)

    def pdf(self, x):
        return 1.0 / self.omega if 0.0 <= x <= self.omega else 0.0

    def quantile(self, p):
        return p * self.omega

    def cdf_array(self, x):
        return np.clip(np.asarray(x, dtype=float) / self.omega, 0.0, 1.0)

    def pdf_array(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= self.omega), 1.0 / self.omega, 0.0)

    def _draw(self, rng, n):
        return rng.uniform(0.0, self.omega, n)

    def params(self):
        return {"omega": self.omega}


@dataclass(frozen=True)
class LogNormal(ValuationDistribution):
    """``X = exp(W)`` with ``W ~ N(mu, sigma)``; support ``(0, inf)``."""

    mu: float = 0.0
    sigma: float = 1.0
    kind: ClassVar[str] = "lognormal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"LogNormal requires sigma > 0, got {self.sigma}")

    @property
    def hi(self):
        return math.inf

    def z(self, x: float) -> float:
        return (math.log(x) - self.mu) / self.sigma

    def cdf(self, x):
        if x <= 0.0:
            return 0.0  # right limit at 0
        if math.isinf(x):
            return 1.0
        return norm_cdf(self.z(x))

    def logcdf(self, x):
        # stays finite deep in the left tail where cdf underflows
        if x <= 0.0:
            return -math.inf
        if math.isinf(x):
            return 0.0
        return float(special.log_ndtr(self.z(x)))

    def pdf(self, x):
        if x <= 0.0 or math.isinf(x):
            return 0.0
        return norm_pdf(self.z(x)) / (x * self.sigma)

    def quantile(self, p):
        if p <= 0.0:
            return 0.0
        if p >= 1.0:
            return math.inf
        return math.exp(self.mu + self.sigma * _STD_NORMAL.inv_cdf(p))

    def cdf_array(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.where(x > 0, x, 1.0)) - self.mu) / self.sigma
        return np.where(x > 0, special.ndtr(z), 0.0)

    def pdf_array(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        z = (np.log(safe) - self.mu) / self.sigma
        return np.where(x > 0, _INV_SQRT_2PI * np.exp(-0.5 * z * z) / (safe * self.sigma), 0.0)

    def _draw(self, rng, n):
        return rng.lognormal(self.mu, self.sigma, n)

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class IrwinHall2(ValuationDistribution):
    """Sum of two independent standard uniforms, support ``[0, 2]``."""

    kind: ClassVar[str] = "irwinhall2"

    @property
    def hi(self):
        return 2.0

    def cdf(self, x):
        if x <= 0.0:
            return 0.0
        if x < 1.0:
            return 0.5 * x * x
        if x <= 2.0:
            return 2.0 * x - 1.0 - 0.5 * x * x
        return 1.0

    def pdf(self, x):
        if x < 0.0 or x > 2.0:
            return 0.0
        return x if x < 1.0 else 2.0 - x

    def quantile(self, p):
        if p <= 0.5:
            return math.sqrt(2.0 * max(p, 0.0))
        return 2.0 - math.sqrt(2.0 * max(1.0 - p, 0.0))

    def cdf_array(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 2.0)
        return np.where(x < 1.0, 0.5 * x * x, 2.0 * x - 1.0 - 0.5 * x * x)

    def pdf_array(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= 2)
        return np.where(inside, np.where(x < 1.0, x, 2.0 - x), 0.0)

    def _draw(self, rng, n):
        return rng.random(n) + rng.random(n)

    def params(self):
        return {}


@dataclass(frozen=True)
class FoldedNormal(ValuationDistribution):
    """``|N(loc, scale)|``; used to draw strictly positive design parameters."""

    loc: float = 0.5
    scale: float = 1.0
    kind: ClassVar[str] = "foldednormal"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"FoldedNormal requires scale > 0, got {self.scale}")

    @property
    def hi(self):
        return math.inf

    def cdf(self, x):
        if x <= 0.0:
            return 0.0
        if math.isinf(x):
            return 1.0
        s = self.scale
        # P(|Z| <= x) = Phi((x-m)/s) - Phi((-x-m)/s)
        return norm_cdf((x - self.loc) / s) - norm_cdf((-x - self.loc) / s)

    def pdf(self, x):
        if x < 0.0 or math.isinf(x):
            return 0.0
        s = self.scale
        return (norm_pdf((x - self.loc) / s) + norm_pdf((x + self.loc) / s)) / s

    def quantile(self, p):
        if p <= 0.0:
            return 0.0
        if p >= 1.0:
            return math.inf
        hi = abs(self.loc) + 40.0 * self.scale
        return find_root(lambda t: self.cdf(t) - p, RootSpec((0.0, hi), tol=1e-13))

    def _draw(self, rng, n):
        return np.abs(rng.normal(self.loc, self.scale, n))

    def params(self):
        return {"loc": self.loc, "scale": self.scale}


_KINDS = {cls.kind: cls for cls in (Uniform, LogNormal, IrwinHall2, FoldedNormal)}


def from_dict(obj: dict) -> ValuationDistribution:
    """Inverse of :meth:`ValuationDistribution.to_dict`."""
    try:
        cls = _KINDS[obj["kind"].lower()]
    except KeyError as exc:
        raise ValueError(f"unknown distribution {obj.get('kind')!r}; expected one of {sorted(_KINDS)}") from exc
    return cls(**obj.get("params", {}))


@dataclass(frozen=True)
class OrderStatisticDistribution:
    """Highest of ``rivals`` i.i.d. draws from ``base``: ``G = F**rivals``."""

    base: ValuationDistribution
    rivals: int

    def __post_init__(self):
        if self.rivals < 1:
            raise ValueError("rivals must be a positive integer")

    def cdf(self, y: float) -> float:
        return self.base.cdf(y) ** self.rivals

    def pdf(self, y: float) -> float:
        n = self.rivals
        F = self.base.cdf(y)
        return n * F ** (n - 1) * self.base.pdf(y) if n > 1 else self.base.pdf(y)

    def cdf_array(self, y):
        return self.base.cdf_array(y) ** self.rivals

    def pdf_array(self, y):
        n = self.rivals
        return n * self.base.cdf_array(y) ** (n - 1) * self.base.pdf_array(y)


def order_stat(dist: ValuationDistribution, M: int) -> OrderStatisticDistribution:
    """Distribution of the highest valuation among the ``M - 1`` rivals."""
    if M < 2:
        raise ValueError(f"an auction needs at least two bidders, got M={M}")
    return OrderStatisticDistribution(dist, M - 1)
