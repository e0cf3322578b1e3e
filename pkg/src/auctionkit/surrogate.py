"""Regression surrogates for the log-normal equilibrium bid.

A design table holds sampled ``(x, mu, sigma, M)`` rows together with the
bid computed by quadrature. Two models are fitted to it:

* the power model ``bid = C x**a1 mu**a2 sigma**a3 M**a4``, which is linear
  in logs and so is fitted by ordinary least squares on ``ln bid``;
* a polynomial benchmark in levels,
  ``bid = b0 + sum_k (b_xk x**k + b_sk sigma**k + b_mk mu**k + b_Mk (M-1)**k)``.

Correlations are always reported between predicted and actual bids in
levels.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .distributions import LogNormal
from .equilibrium import AuctionSpec, bid_general
from .numerics import DEFAULT_QUAD, NumericalError, QuadratureSpec

CSV_HEADER = ("bid", "x", "mu", "sigma", "M")
POWER_TERMS = ("ln_x", "ln_mu", "ln_sigma", "ln_M")


class RankDeficiencyError(ValueError):
    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        super().__init__(f"design matrix is rank deficient; collinear columns: {', '.join(self.columns)}")


@dataclass
class DesignTable:
    bid: np.ndarray
    x: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    M: np.ndarray
    accu_param: float = float("nan")
    seed: Optional[int] = None
    rejected_draws: int = 0
    failed_rows: int = 0

    def __post_init__(self):
        cols = [np.asarray(c, dtype=float) for c in (self.bid, self.x, self.mu, self.sigma, self.M)]
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise ValueError("design columns have different lengths")
        self.bid, self.x, self.mu, self.sigma, self.M = cols
        if n and (np.any(self.M < 2) or np.any(self.M != np.round(self.M))):
            raise ValueError("bidder counts must be integers >= 2")

    def __len__(self):
        return len(self.bid)

    @property
    def sample_size(self) -> int:
        return len(self)

    def subset(self, mask) -> "DesignTable":
        return DesignTable(self.bid[mask], self.x[mask], self.mu[mask], self.sigma[mask], self.M[mask],
                           self.accu_param, self.seed)

    def permuted(self, seed: int) -> "DesignTable":
        return self.subset(np.random.default_rng(seed).permutation(len(self)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for row in zip(self.bid, self.x, self.mu, self.sigma, self.M):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            repr(float(row[3])), int(row[4])])

    @classmethod
    def from_csv(cls, path) -> "DesignTable":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(CSV_HEADER) - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}; expected header {','.join(CSV_HEADER)}")
            rows = [[float(r[k]) for k in CSV_HEADER] for r in reader]
        if not rows:
            return cls(*(np.empty(0) for _ in CSV_HEADER))
        return cls(*np.asarray(rows, dtype=float).T)


def _folded(rng: np.random.Generator, loc: float, scale: float, n: int) -> tuple[np.ndarray, int]:
    """``n`` strictly positive draws of ``|N(loc, scale)|``; zero draws are redrawn."""
    out = np.abs(rng.normal(loc, scale, n))
    rejected = 0
    bad = out <= 0.0
    while bad.any():
        k = int(bad.sum())
        rejected += k
        out[bad] = np.abs(rng.normal(loc, scale, k))
        bad = out <= 0.0
    return out, rejected


def _bidder_counts(rng: np.random.Generator, loc: float, scale: float, n: int) -> tuple[np.ndarray, int]:
    """``ceil(|N(loc, scale)|)`` redrawn until at least 2."""
    M = np.ceil(np.abs(rng.normal(loc, scale, n)))
    rejected = 0
    bad = M < 2
    while bad.any():
        k = int(bad.sum())
        rejected += k
        M[bad] = np.ceil(np.abs(rng.normal(loc, scale, k)))
        bad = M < 2
    return M, rejected


def sample_design(n: int, accu_param: float = 1.0, seed: int = 0, loc: float = 0.5,
                  bidder_loc: float = 0.5, bidder_scale_factor: float = 4.0,
                  use_kernel: bool = True, quad: QuadratureSpec = DEFAULT_QUAD) -> DesignTable:
    """Sample a design and compute the equilibrium log-normal bid for each row.

    ``x``, ``mu`` and ``sigma`` are folded normals with location ``loc`` and
    scale ``accu_param``; bidder counts are ``ceil`` of a folded normal with
    scale ``bidder_scale_factor * accu_param``, redrawn until ``>= 2``.

    ``use_kernel`` selects the batch kernel (numba or numpy backend); with
    ``use_kernel=False`` each row goes through :func:`bid_general`. Rows whose
    quadrature fails, or whose bid is not in ``(0, x]``, are dropped and
    counted in ``failed_rows``.
    """
    if n < 10:
        raise ValueError("a design needs at least 10 rows")
    if not accu_param > 0:
        raise ValueError("accu_param must be positive")
    rng = np.random.default_rng(seed)
    x, r1 = _folded(rng, loc, accu_param, n)
    mu, r2 = _folded(rng, loc, accu_param, n)
    sigma, r3 = _folded(rng, loc, accu_param, n)
    M, r4 = _bidder_counts(rng, bidder_loc, bidder_scale_factor * accu_param, n)
    if use_kernel:
        shading, ok = _kernels.lognormal_shading(x, mu, sigma, M, abs_tol=quad.abs_tol)
        bid = x - shading
    else:
        bid = np.empty(n)
        ok = np.ones(n, dtype=bool)
        for i in range(n):
            try:
                bid[i] = bid_general(AuctionSpec(int(M[i]), LogNormal(mu[i], sigma[i])), x[i], quad).bid
            except NumericalError:
                ok[i] = False
                bid[i] = np.nan
    ok &= np.isfinite(bid) & (bid > 0.0) & (bid <= x)
    table = DesignTable(bid[ok], x[ok], mu[ok], sigma[ok], M[ok], accu_param, seed,
                        rejected_draws=r1 + r2 + r3 + r4, failed_rows=int((~ok).sum()))
    return table


def _lstsq(X: np.ndarray, y: np.ndarray, names: Sequence[str]) -> np.ndarray:
    # scale columns before the rank test so units do not masquerade as collinearity
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    Xs = X / norms
    _, s, vt = np.linalg.svd(Xs, full_matrices=False)
    tol = s.max() * max(X.shape) * np.finfo(float).eps * 1e3
    if s.min() <= tol:
        null = vt[-1]
        cols = [names[j] for j in np.nonzero(np.abs(null) > 1e-6)[0]]
        raise RankDeficiencyError(cols or list(names))
    coef, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    return coef / norms


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) < 2 or np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


@dataclass
class SurrogateModel:
    """Power model ``C x**a1 mu**a2 sigma**a3 M**a4``."""

    C: float
    a1: float
    a2: float
    a3: float
    a4: float
    fit_corr_in: float = float("nan")
    fit_corr_out: float = float("nan")
    use_m_minus_1: bool = False
    n_train: int = 0
    log_residual_mean: float = float("nan")

    @property
    def exponents(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4])

    def predict(self, x, mu, sigma, M) -> np.ndarray:
        m = np.asarray(M, dtype=float) - (1.0 if self.use_m_minus_1 else 0.0)
        return (self.C * np.power(x, self.a1) * np.power(mu, self.a2)
                * np.power(sigma, self.a3) * np.power(m, self.a4))

    def predict_table(self, table: DesignTable) -> np.ndarray:
        return self.predict(table.x, table.mu, table.sigma, table.M)

    def to_dict(self) -> dict:
        return {
            "C": self.C, "a1": self.a1, "a2": self.a2, "a3": self.a3, "a4": self.a4,
            "diagnostics": {
                "fit_corr_in": self.fit_corr_in,
                "fit_corr_out": self.fit_corr_out,
                "use_m_minus_1": self.use_m_minus_1,
                "n_train": self.n_train,
                "log_residual_mean": self.log_residual_mean,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurrogateModel":
        diag = d.get("diagnostics", {})
        return cls(d["C"], d["a1"], d["a2"], d["a3"], d["a4"],
                   diag.get("fit_corr_in", float("nan")), diag.get("fit_corr_out", float("nan")),
                   diag.get("use_m_minus_1", False), diag.get("n_train", 0),
                   diag.get("log_residual_mean", float("nan")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _power_design(table: DesignTable, use_m_minus_1: bool) -> np.ndarray:
    m = table.M - (1.0 if use_m_minus_1 else 0.0)
    if np.any(m <= 0):
        raise ValueError("M - 1 must be positive for every row in the power model")
    return np.column_stack([np.ones(len(table)), np.log(table.x), np.log(table.mu),
                            np.log(table.sigma), np.log(m)])


def fit_power(table: DesignTable, use_m_minus_1: bool = False) -> SurrogateModel:
    """Least squares on ``ln bid = ln C + a1 ln x + a2 ln mu + a3 ln sigma + a4 ln M``."""
    if len(table) < 5:
        raise ValueError("need at least 5 rows to fit five coefficients")
    if np.any(table.bid <= 0) or np.any(table.x <= 0) or np.any(table.mu <= 0) or np.any(table.sigma <= 0):
        raise ValueError("power model needs strictly positive bid, x, mu and sigma")
    X = _power_design(table, use_m_minus_1)
    y = np.log(table.bid)
    coef = _lstsq(X, y, ("const",) + POWER_TERMS)
    model = SurrogateModel(math.exp(coef[0]), *map(float, coef[1:]), use_m_minus_1=use_m_minus_1,
                           n_train=len(table))
    model.log_residual_mean = float(np.mean(y - X @ coef))
    model.fit_corr_in = _corr(model.predict_table(table), table.bid)
    return model


@dataclass
class BucketedPowerModel:
    """One power model per ``x`` bucket; buckets split at training quantiles of ``x``."""

    edges: np.ndarray
    models: list
    fit_corr_in: float = float("nan")

    def predict(self, x, mu, sigma, M) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.models) - 1)
        out = np.empty_like(x)
        for k, model in enumerate(self.models):
            sel = idx == k
            if sel.any():
                out[sel] = model.predict(x[sel], np.asarray(mu)[sel], np.asarray(sigma)[sel], np.asarray(M)[sel])
        return out

    def predict_table(self, table: DesignTable) -> np.ndarray:
        return self.predict(table.x, table.mu, table.sigma, table.M)


def fit_power_bucketed(table: DesignTable, buckets: int = 1, use_m_minus_1: bool = False):
    """Power fits on ``buckets`` quantile bins of ``x``; ``buckets=1`` is :func:`fit_power`."""
    if buckets < 1:
        raise ValueError("buckets must be >= 1")
    if buckets == 1:
        return fit_power(table, use_m_minus_1)
    edges = np.quantile(table.x, np.linspace(0.0, 1.0, buckets + 1))
    edges[0], edges[-1] = -np.inf, np.inf
    idx = np.clip(np.searchsorted(edges, table.x, side="right") - 1, 0, buckets - 1)
    models = [fit_power(table.subset(idx == k), use_m_minus_1) for k in range(buckets)]
    out = BucketedPowerModel(edges, models)
    out.fit_corr_in = _corr(out.predict_table(table), table.bid)
    return out


@dataclass
class LinearModel:
    intercept: float
    slopes: dict = field(default_factory=dict)  # name -> [power 1, power 2, ...]
    order: int = 1
    fit_corr_in: float = float("nan")
    negative_fraction_in: float = float("nan")

    def predict(self, x, mu, sigma, M) -> np.ndarray:
        """Predictions are NOT clamped; negative values are possible and are reported."""
        cols = {"x": np.asarray(x, float), "sigma": np.asarray(sigma, float),
                "mu": np.asarray(mu, float), "M-1": np.asarray(M, float) - 1.0}
        out = np.full(np.broadcast(*cols.values()).shape, self.intercept)
        for name, coefs in self.slopes.items():
            for k, c in enumerate(coefs, start=1):
                out = out + c * cols[name] ** k
        return out

    def predict_table(self, table: DesignTable) -> np.ndarray:
        return self.predict(table.x, table.mu, table.sigma, table.M)

    def to_dict(self) -> dict:
        return {"intercept": self.intercept, "slopes": self.slopes, "order": self.order,
                "diagnostics": {"fit_corr_in": self.fit_corr_in,
                                "negative_fraction_in": self.negative_fraction_in}}


def fit_linear(table: DesignTable, order: int = 1) -> LinearModel:
    if order < 1:
        raise ValueError("order must be >= 1")
    if len(table) < 4 * order + 1:
        raise ValueError(f"need at least {4 * order + 1} rows for order {order}")
    base = {"x": table.x, "sigma": table.sigma, "mu": table.mu, "M-1": table.M - 1.0}
    names, cols = ["const"], [np.ones(len(table))]
    for name, col in base.items():
        for k in range(1, order + 1):
            names.append(f"{name}^{k}" if k > 1 else name)
            cols.append(col ** k)
    coef = _lstsq(np.column_stack(cols), table.bid, names)
    slopes = {name: [float(coef[1 + j * order + k]) for k in range(order)] for j, name in enumerate(base)}
    model = LinearModel(float(coef[0]), slopes, order)
    pred = model.predict_table(table)
    model.fit_corr_in = _corr(pred, table.bid)
    model.negative_fraction_in = float(np.mean(pred < 0))
    return model


@dataclass(frozen=True)
class EvalReport:
    n: int
    corr: float
    mean_rel_error: float
    negative_fraction: float

    def to_dict(self) -> dict:
        return {"n": self.n, "corr": self.corr, "mean_rel_error": self.mean_rel_error,
                "negative_fraction": self.negative_fraction}


def evaluate(model, holdout: DesignTable) -> EvalReport:
    """Out-of-sample correlation, mean relative error and share of negative predictions."""
    if len(holdout) == 0:
        raise ValueError("holdout table is empty")
    pred = model.predict_table(holdout)
    rel = np.abs(pred - holdout.bid) / holdout.bid
    return EvalReport(len(holdout), _corr(pred, holdout.bid), float(np.mean(rel)), float(np.mean(pred < 0)))
