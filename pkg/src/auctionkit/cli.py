"""``auctionkit`` command line.

Subcommands print one JSON object on stdout (``pmf`` prints its table as
CSV unless ``--json`` is given); larger tables go to CSV files named by
``--emit-curve`` / ``--output-table``. Exit status is 0 on success,
2 for invalid input and 1 when a numerical routine fails.

A ``--config file.json`` option may supply any flag (keys use the long flag
name, with dashes or underscores). Flags given on the command line win over
the file. ``AUCTIONKIT_SEED`` in the environment overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .asymmetric import TwoGroupSpec, bid_asymmetric, solve_two_group, two_group_residuals
from .bidder_count import BidderCountPMF, bid_uncertain, delta_p, discrete_symmetric_pmf
from .distributions import IrwinHall2, LogNormal, Uniform
from .equilibrium import (
    AuctionSpec,
    BelowReserveError,
    bid,
    expected_revenue,
    optimal_reserve,
    seller_payoff,
)
from .harness import equilibrium_strategy, simulate, truthful
from .interdependent import (
    InterdepSpec,
    bid_combined,
    bid_combined_uncertain,
    bid_interdependent,
    bid_irwinhall_closed,
    x_star,
)
from .numerics import NumericalError, QuadratureSpec
from .surrogate import DesignTable, evaluate, fit_linear, fit_power_bucketed, sample_design

log = logging.getLogger("auctionkit")


class UsageError(ValueError):
    pass


def _dist_from_args(args):
    if args.params:
        try:
            params = json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--params is not valid JSON: {exc}") from exc
        if not isinstance(params, dict):
            raise UsageError("--params must be a JSON object")
        for key, value in params.items():
            if key not in ("omega", "mu", "sigma"):
                raise UsageError(f"unknown distribution parameter {key!r}")
            setattr(args, key, float(value))
    kind = args.dist
    if kind == "uniform":
        return Uniform(args.omega)
    if kind == "lognormal":
        return LogNormal(args.mu, args.sigma)
    if kind == "irwinhall2":
        return IrwinHall2()
    raise UsageError(f"unknown distribution {kind!r}")


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(abs_tol=args.abs_tol, rel_tol=args.rel_tol)


def _pmf(args, M: int) -> Optional[BidderCountPMF]:
    if not getattr(args, "pmf", None):
        return None
    if args.pmf == "symmetric":
        return discrete_symmetric_pmf(M)
    raise UsageError(f"unknown pmf {args.pmf!r}; only 'symmetric' is available")


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        w.writerow(header)
        w.writerows(rows)


def _curve_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 2:
        raise UsageError("--curve-points must be >= 2")
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_bid(args) -> dict:
    dist = _dist_from_args(args)
    spec = AuctionSpec(args.bidders, dist, reserve=args.reserve)
    quad = _quad(args)
    pmf = _pmf(args, args.bidders)

    def one(x: float) -> dict:
        if pmf is not None:
            if args.reserve > 0:
                raise UsageError("--pmf with --reserve is not supported for private values")
            return bid_uncertain(pmf, dist, x, quad).to_dict()
        return bid(spec, x, args.method, args.printed_variant, quad).to_dict()

    if args.emit_curve:
        top = dist.upper(1e-6)
        rows = []
        for x in _curve_grid(args.reserve, top, args.curve_points):
            rows.append((float(x), one(float(x))["bid"]))
        _write_csv(args.emit_curve, ("x", "bid"), rows)
    if args.valuation is None:
        if not args.emit_curve:
            raise UsageError("--valuation is required unless --emit-curve is given")
        return {"curve": args.emit_curve}
    try:
        out = one(args.valuation)
    except BelowReserveError as exc:
        return {"bid": None, "method": None, "est_error": None, "reason": str(exc)}
    out.update(valuation=args.valuation, bidders=args.bidders, dist=dist.to_dict())
    return out


def cmd_pmf(args):
    pmf = discrete_symmetric_pmf(args.bidders)
    if args.json:
        return {"M": args.bidders, "delta_p": str(delta_p(args.bidders)),
                "rivals": list(range(args.bidders)), "p": list(pmf.p)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rivals", "p"))
    w.writerows((l, repr(q)) for l, q in enumerate(pmf.p))
    return buf.getvalue().rstrip("\n")


def cmd_asym(args) -> dict:
    spec = TwoGroupSpec(Uniform(args.omega1), Uniform(args.omega2), args.K, args.bidders)
    table = solve_two_group(spec, steps=args.steps)
    res = two_group_residuals(spec, table)
    out = {"b_bar": table.b_bar, "rows": len(table.b), "max_residual": float(np.abs(res).max())}
    if args.valuation is not None:
        out["group"] = args.group
        out.update(bid_asymmetric(table, args.group, args.valuation).to_dict())
    if args.emit_curve:
        _write_csv(args.emit_curve, ("b", "phi1", "phi2"),
                   ((float(b), float(p1), "" if math.isnan(p2) else float(p2)) for b, p1, p2 in table.rows()))
        out["curve"] = args.emit_curve
    return out


def cmd_interdep(args) -> dict:
    spec = InterdepSpec(args.bidders, args.alpha, args.xi, args.reserve)
    quad = _quad(args)
    pmf = _pmf(args, args.bidders)

    def one(x: float):
        if pmf is not None:
            return bid_combined_uncertain(pmf, spec, x, quad)
        if args.reserve > 0:
            return bid_combined(spec, x, quad)
        if args.method == "closed":
            return bid_irwinhall_closed(spec, x, args.printed_variant)
        return bid_interdependent(spec, x, quad)

    out = {"alpha": args.alpha, "xi": args.xi, "bidders": args.bidders, "reserve": args.reserve}
    if args.reserve > 0:
        out["x_star"] = x_star(spec)
    if args.emit_curve:
        lo = out.get("x_star", 0.0) if pmf is None else 0.0
        rows = [(float(x), one(float(x)).bid) for x in _curve_grid(lo, 2.0, args.curve_points)]
        _write_csv(args.emit_curve, ("x", "bid"), rows)
        out["curve"] = args.emit_curve
    if args.valuation is not None:
        try:
            out.update(one(args.valuation).to_dict())
        except BelowReserveError as exc:
            out.update(bid=None, reason=str(exc))
        out["valuation"] = args.valuation
    elif not args.emit_curve:
        raise UsageError("--valuation is required unless --emit-curve is given")
    return out


def cmd_fit(args) -> dict:
    if args.input:
        table = DesignTable.from_csv(args.input)
    else:
        table = sample_design(args.sample, args.accu_param, args.seed)
        log.info("sampled %d rows (%d draws rejected, %d rows failed)",
                 len(table), table.rejected_draws, table.failed_rows)
    if args.output_table:
        table.to_csv(args.output_table)
    power = fit_power_bucketed(table, args.buckets, args.use_m_minus_1)
    linear = fit_linear(table, args.linear_order)
    out = {"n": len(table), "power_corr_in": power.fit_corr_in, "linear_corr_in": linear.fit_corr_in,
           "linear_negative_fraction": linear.negative_fraction_in}
    if args.buckets == 1:
        out["power"] = power.to_dict()
    if args.holdout_seed is not None:
        holdout = sample_design(max(10, len(table)), args.accu_param, args.holdout_seed)
        out["power_corr_out"] = evaluate(power, holdout).corr
        out["linear_out"] = evaluate(linear, holdout).to_dict()
        if args.buckets == 1:
            power.fit_corr_out = out["power_corr_out"]
            out["power"] = power.to_dict()
    if args.model_out:
        if args.buckets != 1:
            raise UsageError("--model-out supports the single-bucket power model only")
        power.save(args.model_out)
    return out


def cmd_simulate(args) -> dict:
    dist = _dist_from_args(args)
    spec = AuctionSpec(args.bidders, dist, reserve=args.reserve, seller_value=args.seller_value)
    strat = truthful if args.strategy == "truthful" else equilibrium_strategy(spec)
    report = simulate(spec, strat, args.rounds, args.seed)
    out = report.to_dict()
    out["theory_revenue"] = expected_revenue(dist, args.bidders, args.reserve) if args.strategy == "equilibrium" else None
    out["theory_no_sale"] = dist.cdf(args.reserve) ** args.bidders
    return out


def cmd_reserve(args) -> dict:
    dist = _dist_from_args(args)
    r = optimal_reserve(dist, args.seller_value)
    out = {"r_star": r}
    if args.bidders is not None:
        out["expected_revenue"] = expected_revenue(dist, args.bidders, r)
        out["seller_payoff"] = seller_payoff(dist, args.bidders, r, args.seller_value)
    return out


def cmd_check(args) -> dict:
    from .checks import run_checks

    results = run_checks()
    failed = [name for name, ok, _ in results if not ok]
    payload = {"passed": len(results) - len(failed), "failed": failed,
               "results": [{"name": n, "ok": ok, "detail": d} for n, ok, d in results]}
    if failed:
        print(json.dumps(payload, indent=2))
        raise NumericalError(f"{len(failed)} invariant check(s) failed: {', '.join(failed)}")
    return payload


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file supplying flag values")
    p.add_argument("--abs-tol", type=float, default=1e-10)
    p.add_argument("--rel-tol", type=float, default=1e-8)


def _dist_flags(p: argparse.ArgumentParser):
    p.add_argument("--dist", choices=("uniform", "lognormal", "irwinhall2"), default="uniform")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--params", metavar="JSON", help='distribution parameters, e.g. \'{"mu": 0, "sigma": 1}\'')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="auctionkit", description="First-price auction equilibrium toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bid", help="equilibrium bid for private values")
    _common(p)
    _dist_flags(p)
    p.add_argument("--bidders", type=int, required=True)
    p.add_argument("--valuation", type=float)
    p.add_argument("--reserve", type=float, default=0.0)
    p.add_argument("--method", choices=("auto", "closed", "quad", "approx"), default="auto")
    p.add_argument("--pmf", choices=("symmetric",))
    p.add_argument("--printed-variant", action="store_true",
                   help="use the alternative reserve closed forms ((M+1)/M coefficient, h'(r) term); "
                        "they miss beta(r) = r and exist for comparison only")
    p.add_argument("--emit-curve", metavar="CSV")
    p.add_argument("--curve-points", type=int, default=101)
    p.set_defaults(func=cmd_bid)

    p = sub.add_parser("pmf", help="discrete symmetric distribution of the rival count")
    _common(p)
    p.add_argument("--bidders", type=int, required=True)
    p.add_argument("--json", action="store_true", help="print JSON instead of CSV")
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("asym", help="two-group asymmetric equilibrium with uniform groups")
    _common(p)
    p.add_argument("--omega1", type=float, default=1.0)
    p.add_argument("--omega2", type=float, default=1.0)
    p.add_argument("--K", type=int, default=0, help="group 1 has K+1 bidders")
    p.add_argument("--bidders", type=int, required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--group", type=int, choices=(1, 2), default=1)
    p.add_argument("--valuation", type=float)
    p.add_argument("--emit-curve", metavar="CSV")
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("interdep", help="interdependent values with Irwin-Hall signals")
    _common(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--xi", type=float, default=0.5)
    p.add_argument("--bidders", type=int, required=True)
    p.add_argument("--reserve", type=float, default=0.0)
    p.add_argument("--valuation", type=float)
    p.add_argument("--pmf", choices=("symmetric",))
    p.add_argument("--method", choices=("quad", "closed"), default="quad")
    p.add_argument("--printed-variant", action="store_true",
                   help="closed form with x**(2M-2) in the leading term (comparison only)")
    p.add_argument("--emit-curve", metavar="CSV")
    p.add_argument("--curve-points", type=int, default=101)
    p.set_defaults(func=cmd_interdep)

    p = sub.add_parser("fit", help="power and linear surrogates for the log-normal bid")
    _common(p)
    p.add_argument("--input", metavar="CSV", help="design table with header bid,x,mu,sigma,M")
    p.add_argument("--sample", type=int, default=5000)
    p.add_argument("--accu-param", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout-seed", type=int)
    p.add_argument("--buckets", type=int, default=1)
    p.add_argument("--use-m-minus-1", action="store_true")
    p.add_argument("--linear-order", type=int, default=1)
    p.add_argument("--output-table", metavar="CSV")
    p.add_argument("--model-out", metavar="JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte Carlo first-price auctions")
    _common(p)
    _dist_flags(p)
    p.add_argument("--bidders", type=int, required=True)
    p.add_argument("--reserve", type=float, default=0.0)
    p.add_argument("--seller-value", type=float, default=0.0)
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", choices=("equilibrium", "truthful"), default="equilibrium")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reserve", help="optimal reserve price")
    _common(p)
    _dist_flags(p)
    p.add_argument("--seller-value", type=float, default=0.0)
    p.add_argument("--bidders", type=int)
    p.set_defaults(func=cmd_reserve)

    p = sub.add_parser("check", help="run the invariant suite")
    _common(p)
    p.set_defaults(func=cmd_check)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise UsageError("--config must hold a JSON object")
        known = vars(args)
        defaults = {}
        for key, value in cfg.items():
            dest = key.lstrip("-").replace("-", "_")
            if dest not in known:
                raise UsageError(f"unknown config key {key!r} for '{args.command}'")
            defaults[dest] = value
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if "seed" in vars(args) and os.environ.get("AUCTIONKIT_SEED"):
        try:
            args.seed = int(os.environ["AUCTIONKIT_SEED"])
        except ValueError as exc:
            raise UsageError(f"AUCTIONKIT_SEED must be an integer, got {os.environ['AUCTIONKIT_SEED']!r}") from exc
    return args


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except (UsageError, ValueError, OSError) as exc:
        print(f"auctionkit: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except (NumericalError, ArithmeticError) as exc:
        print(f"auctionkit: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ValueError, OSError) as exc:
        print(f"auctionkit: error: {exc}", file=sys.stderr)
        return 2
    print(result if isinstance(result, str) else json.dumps(result, default=_jsonable))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
