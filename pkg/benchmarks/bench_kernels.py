"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--rows 1000000] [--repeat 5]

The first numba call (compilation) is excluded from the timings.
"""
import argparse
import timeit

import numpy as np

from causalperf import kernels


def cases(rows: int, rng: np.random.Generator):
    cards = np.array([3, 2, 4, 2, 3], dtype=np.int64)
    codes = np.column_stack([rng.integers(0, c, rows) for c in cards]).astype(np.int64)
    flat = kernels.mixed_radix_index_np(codes, cards)
    size = int(np.prod(cards))

    k = 4
    cum = np.cumsum(rng.dirichlet(np.ones(k), size=64), axis=1)
    cum[:, -1] = 1.0
    pidx = rng.integers(0, 64, rows).astype(np.int64)
    u = rng.random(rows)

    counts = rng.integers(0, 50, (512, 3, 3)).astype(np.float64)

    # binary chain of 14 nodes: 16384 joint states
    n = 14
    jcards = np.full(n, 2, dtype=np.int64)
    parent_ptr = np.array([0] + list(range(n)), dtype=np.int64)
    parent_idx = np.arange(n - 1, dtype=np.int64)
    tables = [rng.dirichlet(np.ones(2))] + [rng.dirichlet(np.ones(2), size=2).ravel() for _ in range(n - 1)]
    table_ptr = np.cumsum([0] + [len(t) for t in tables]).astype(np.int64)
    tables = np.concatenate(tables)

    return {
        "mixed_radix_index": (codes, cards),
        "count_cells": (flat, size),
        "sample_categorical": (cum, pidx, u),
        "g2_strata": (counts,),
        "joint_table": (jcards, parent_ptr, parent_idx, table_ptr, tables),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'kernel':<20} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, call_args in cases(args.rows, np.random.default_rng(args.seed)).items():
        nb = getattr(kernels, f"{name}_nb")
        fallback = getattr(kernels, f"{name}_np")
        nb(*call_args)
        t_nb = min(timeit.repeat(lambda: nb(*call_args), number=1, repeat=args.repeat)) * 1e3
        t_np = min(timeit.repeat(lambda: fallback(*call_args), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<20} {t_nb:>10.3f} {t_np:>10.3f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
