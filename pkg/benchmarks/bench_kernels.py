"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from povm_learn import kernels
from povm_learn.complexity import witness_grid
from povm_learn.zoo import make_diagonal_shattering_class


def workloads(rng):
    probs = rng.dirichlet(np.ones(4), size=200_000)
    u = rng.random(200_000)

    table = rng.random((100_000, 4))
    z = rng.integers(0, 4, 10)
    y = rng.integers(0, 2, 10)
    uu = rng.random((100_000, 10))

    cls = make_diagonal_shattering_class(8, 0.8)
    F = cls.one_probabilities(cls.domain)
    grid = witness_grid(0.25)

    # random class: no shattering, so the search explores the full tree
    Fr = rng.random((256, 8))
    return {
        "sample_outcomes 200k x 4": ("sample_outcomes", (probs, u)),
        "channel_error_counts 1e5 x 10": ("channel_error_counts", (table, z, y, uu)),
        "shatter_search diag n=8": ("shatter_search", (F, grid, 0.25, 1e-8)),
        "shatter_search random 256 x 8": ("shatter_search", (Fr, witness_grid(0.1), 0.1, 1e-8)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = kernels.implementations()
    loads = workloads(np.random.default_rng(0))
    names = list(impls)
    print(f"{'workload':34s}" + "".join(f"{n:>12s}" for n in names) + (f"{'speedup':>10s}" if len(names) > 1 else ""))
    for label, (fn, fargs) in loads.items():
        times = []
        for n in names:
            f = getattr(impls[n], fn)
            times.append(min(timeit.repeat(lambda: f(*fargs), number=1, repeat=args.repeat)))
        row = f"{label:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
