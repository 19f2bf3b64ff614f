"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--pixels N] [--repeat R]

The first numba call (compilation or cache load) is excluded.
"""

import argparse
import timeit

import numpy as np

from crcmap import kernels


def cases(n, seed=0):
    rng = np.random.default_rng(seed)
    labels = rng.integers(-1, 2, n).astype(np.int8)
    scores = rng.random(n).astype(np.float32)
    asc = np.argsort(scores, kind="stable")
    desc = np.argsort(-scores.astype(np.float64), kind="stable")
    valid = labels[asc] != -1
    return {
        "threshold_counts": (scores, labels, 0.3),
        "zone_codes": (scores, labels, 0.2, 0.6),
        "cost_candidates": (scores[asc][valid], labels[asc][valid]),
        "positive_rank_sum": (scores[asc][valid], labels[asc][valid]),
        "average_precision": (scores[desc], labels[desc]),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pixels", type=int, default=1_000_000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if kernels.NUMBA is None:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, call_args in cases(args.pixels).items():
        times = {}
        for backend in (kernels.NUMPY, kernels.NUMBA):
            fn = getattr(backend, name)
            fn(*call_args)
            best = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
            times[backend.name] = best * 1e3
        print(f"{name:<20}{times['numpy']:>12.2f}{times['numba']:>12.2f}{times['numpy'] / times['numba']:>9.1f}x")


if __name__ == "__main__":
    main()
