#!/usr/bin/env python3
"""Benchmark the projected-operator kernel: compiled extension vs numpy.

The kernel sits inside every local eigensolver iteration, so its overhead
at small and medium sizes translates directly into sweep time. Shapes
mirror the three benchmark operators: spin chains (n=2, operator rank 5),
collocated oscillators (n=16, rank 3), and the box Laplacian (n=16,
rank 2).

Usage: python benchmarks/bench_local_apply.py [--repeats 7] [--csv out.csv]
"""

import argparse
import csv
import sys
import time

import numpy as np

from tteig import _kernels
from tteig._kernels import fallback

CASES = [
    # label, bond rank, mode size, operator rank, block columns
    ("spin chain, warm solve", 10, 2, 5, 6),
    ("spin chain, mid", 30, 2, 5, 6),
    ("spin chain, large", 60, 2, 5, 6),
    ("spin chain, B=20 block", 100, 2, 5, 60),
    ("oscillator, small", 10, 16, 3, 6),
    ("oscillator, mid", 30, 16, 3, 6),
    ("oscillator, large", 50, 16, 3, 6),
    ("box laplacian", 30, 16, 2, 30),
]


def make_problem(rank, n, ra, k, seed=0):
    rng = np.random.default_rng(seed)
    env_l = rng.standard_normal((rank, ra, rank))
    a_core = rng.standard_normal((ra, n, n, ra))
    env_r = rng.standard_normal((rank, ra, rank))
    block = rng.standard_normal((rank * n * rank, k))
    return env_l, a_core, env_r, block


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--csv", default=None, help="also write results here")
    args = parser.parse_args(argv)

    if not _kernels.HAVE_COMPILED:
        print("compiled kernel not available; benchmarking fallback only",
              file=sys.stderr)

    rows = []
    header = f"{'case':<24} {'m':>7} {'numpy':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, rank, n, ra, k in CASES:
        problem = make_problem(rank, n, ra, k)
        m = problem[3].shape[0]
        # agreement check before timing anything
        ref = fallback.local_apply(*problem)
        t_np = best_of(fallback.local_apply, problem, args.repeats)
        if _kernels.HAVE_COMPILED:
            got = _kernels._impl.local_apply(*problem)
            err = np.abs(got - ref).max() / max(1.0, np.abs(ref).max())
            if err > 1e-12:
                raise SystemExit(f"backend mismatch on {label!r}: {err:.2e}")
            t_cy = best_of(_kernels._impl.local_apply, problem, args.repeats)
            speedup = t_np / t_cy
        else:
            t_cy, speedup = float("nan"), float("nan")
        print(f"{label:<24} {m:>7} {t_np * 1e6:>8.0f}us {t_cy * 1e6:>8.0f}us "
              f"{speedup:>7.2f}x")
        rows.append({"case": label, "m": m, "numpy_s": t_np,
                     "compiled_s": t_cy, "speedup": speedup})

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
