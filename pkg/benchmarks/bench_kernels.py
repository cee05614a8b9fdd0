"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--rows 2000]

Each kernel is warmed up once (so JIT compilation is excluded), then timed
``--repeat`` times; the best wall time is reported. Outputs of the two paths
are checked for equality before timing.
"""
import argparse
import time

import numpy as np

from cbm_advbench import _accel
from cbm_advbench.models import _kernels
from cbm_advbench.models.tree import build_forest, build_tree


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    n = args.rows
    X = rng.standard_normal((n, 12))
    y = rng.integers(0, 4, n)
    w = np.ones(n)
    feats = np.arange(12)
    Q = rng.standard_normal((n // 4, 12))
    tree = build_tree(X, y, 4)

    cases = {
        "best_split (root node)": lambda jit: _kernels.best_split(X, y, w, feats, 4, use_jit=jit),
        "tree_apply": lambda jit: _kernels.tree_apply(X, tree.feature, tree.threshold, tree.left, tree.right, use_jit=jit),
        "knn_query (k=5)": lambda jit: _kernels.knn_query(Q, X, 5, use_jit=jit),
        "build_tree (full depth)": lambda jit: build_tree(X, y, 4, use_jit=jit).threshold,
        "build_forest (20 trees)": lambda jit: build_forest(X, y, 4, n_trees=20, seed=1, use_jit=jit).predict(Q, use_jit=jit),
    }
    print(f"rows={n} queries={Q.shape[0]} repeat={args.repeat}")
    print(f"{'kernel':<26}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for name, fn in cases.items():
        a, b = fn(True), fn(False)
        same = all(np.array_equal(u, v) for u, v in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
        if not same:
            raise SystemExit(f"{name}: numba and numpy outputs differ")
        tj = best_of(lambda: fn(True), args.repeat)
        tn = best_of(lambda: fn(False), args.repeat)
        print(f"{name:<26}{tj:>10.4f}{tn:>10.4f}{tn / tj:>8.1f}x")


if __name__ == "__main__":
    main()
