"""Compare the numba and numpy backends of the hot kernels.

    python benchmarks/bench_kernels.py [--rows 5000] [--rounds 1000000] [--repeat 3]

Reports best-of-``repeat`` wall time per kernel and backend, plus the
largest disagreement between the two backends. The first numba call is
timed separately because it includes JIT compilation.
"""

import argparse
import time

import numpy as np

from auctionkit import _kernels


def _design(rows, seed):
    rng = np.random.default_rng(seed)
    x = np.abs(rng.normal(0.5, 1.0, rows)) + 1e-6
    mu = np.abs(rng.normal(0.5, 1.0, rows)) + 1e-6
    sigma = np.abs(rng.normal(0.5, 1.0, rows)) + 1e-3
    M = np.maximum(2.0, np.ceil(np.abs(rng.normal(0.5, 4.0, rows))))
    return x, mu, sigma, M


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=5000)
    ap.add_argument("--rounds", type=int, default=1_000_000)
    ap.add_argument("--bidders", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    if not _kernels.HAVE_NUMBA:
        print("numba not installed: timing the numpy backend only")

    x, mu, sigma, M = _design(args.rows, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    bids = rng.random((args.rounds, args.bidders))
    keys = rng.random((args.rounds, args.bidders))

    if _kernels.HAVE_NUMBA:
        t0 = time.perf_counter()
        _kernels.lognormal_shading(x[:2], mu[:2], sigma[:2], M[:2], force="numba")
        _kernels.clear_first_price(bids[:2], 0.0, keys[:2], force="numba")
        print(f"numba JIT warm-up: {time.perf_counter() - t0:.2f} s")

    shading = {}
    clearing = {}
    print(f"{'kernel':<22}{'backend':<8}{'best (s)':>10}")
    for b in backends:
        t, (out, _) = _best(lambda: _kernels.lognormal_shading(x, mu, sigma, M, force=b), args.repeat)
        shading[b] = out
        print(f"{'lognormal_shading':<22}{b:<8}{t:>10.4f}   rows={args.rows}")
    for b in backends:
        t, out = _best(lambda: _kernels.clear_first_price(bids, 0.25, keys, force=b), args.repeat)
        clearing[b] = out
        print(f"{'clear_first_price':<22}{b:<8}{t:>10.4f}   rounds={args.rounds}")

    if len(backends) == 2:
        gap = np.max(np.abs(shading["numba"] - shading["numpy"]))
        same = all(np.array_equal(a, b) for a, b in zip(clearing["numba"], clearing["numpy"]))
        print(f"max |shading numba - numpy| = {gap:.3e}")
        print(f"clearing results identical: {same}")


if __name__ == "__main__":
    main()
