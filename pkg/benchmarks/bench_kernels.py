"""Time the compiled and pure-Python kernels on cohort-sized inputs.

    python3 benchmarks/bench_kernels.py [--rows 830] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from crtml import _backend
from crtml.clustering import pairwise_distances
from crtml.tree import _xlog2x_table


def cases(rows, cols, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    y = (X[:, 0] + rng.normal(size=rows) > 0).astype(np.intp)
    D = np.ascontiguousarray(pairwise_distances(X))
    order = np.argsort(X, axis=0, kind="stable").astype(np.intp)
    table = _xlog2x_table(rows)
    return {
        "linkage_merges (average)": lambda k: k.linkage_merges(D, 0),
        "best_split_scan": lambda k: k.best_split_scan(X, y, order, table, 1),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=830)
    parser.add_argument("--cols", type=int, default=55)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = {}
    for name in ("cython", "python"):
        try:
            backends[name] = _backend.load(name)
        except ImportError:
            print(f"{name}: not available")
    print(f"rows={args.rows} cols={args.cols} best of {args.repeat}")
    print(f"{'kernel':<26}" + "".join(f"{n:>12}" for n in backends) + f"{'speedup':>10}")
    for label, fn in cases(args.rows, args.cols).items():
        times = {n: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for n, k in backends.items()}
        speed = times["python"] / times["cython"] if len(times) == 2 else float("nan")
        print(f"{label:<26}" + "".join(f"{t:>11.3f}s" for t in times.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
