"""Benchmark the numba kernels against the pure-numpy fallback.

Times the four hot loops (split scan, ensemble prediction, Shapley walk,
k-NN) on synthetic workloads, checks both backends produce bitwise-identical
output, and prints a speedup table.  Requires numba; the numpy side always
runs.

    python3 benchmarks/bench_backends.py [--rows N] [--repeat R] [--seed S]
"""

import argparse
import sys
import time

import numpy as np

from crossphish import kernels_np
from crossphish.backend import numba_available
from crossphish.shapley import exact_weight_table
from crossphish.trees import train_model


def timed(fn, repeat):
    """Best-of-repeat wall time in seconds (first call done by the caller
    as warmup so JIT compilation never lands in the measurement)."""
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def split_workload(rng, n_rows):
    n_slots = 16
    xcol = np.ascontiguousarray(
        np.floor(rng.random(n_rows) * 64.0))
    order = np.argsort(xcol, kind="stable").astype(np.int64)
    node_slot = rng.integers(-1, n_slots, size=n_rows).astype(np.int32)
    g = rng.normal(size=n_rows)
    h = rng.random(n_rows) + 0.1
    w = np.ones(n_rows)
    rows = np.flatnonzero(node_slot >= 0)
    slots = node_slot[rows]
    node_g = np.bincount(slots, weights=g[rows], minlength=n_slots)
    node_h = np.bincount(slots, weights=h[rows], minlength=n_slots)
    node_w = np.bincount(slots, weights=w[rows], minlength=n_slots)
    allowed = np.ones(n_slots, dtype=np.uint8)

    def run(kern):
        gains = np.full(n_slots, -np.inf)
        thrs = np.zeros(n_slots)
        kern.best_split_for_feature(
            xcol, order, node_slot, n_slots, g, h, w,
            node_g, node_h, node_w, allowed, 1.0, 1.0, 1.0, gains, thrs)
        return gains, thrs

    return run


def model_workloads(rng, n_rows):
    m = 20
    X = np.floor(rng.random((max(n_rows, 4000), m)) * 10.0)
    y = ((X[:, 0] + X[:, 3] > 9) | (X[:, 7] > 7)).astype(np.int8)
    names = tuple(f"f{i}" for i in range(m))
    model = train_model("xgb", X, y, names,
                        params={"n_rounds": 100, "max_depth": 5}, seed=0)

    Xp = np.ascontiguousarray(X[:n_rows])

    def run_predict(kern):
        out = np.empty(Xp.shape[0])
        kern.predict_margin(
            model.node_feat, model.node_thresh, model.node_left,
            model.node_right, model.node_value, model.tree_offset,
            model.tree_weight, Xp, model.base_score, out)
        return (out,)

    Xs = np.ascontiguousarray(X[:100])
    B = np.ascontiguousarray(X[100:164])
    depth = model.max_depth()
    wtab = exact_weight_table(max(depth, 1))

    def run_shap(kern):
        phi = np.zeros((Xs.shape[0], m))
        kern.shap_interventional(
            model.node_feat, model.node_thresh, model.node_left,
            model.node_right, model.node_value, model.tree_offset,
            model.tree_weight, Xs, B, wtab, depth, phi)
        return (phi,)

    return run_predict, run_shap


def knn_workload(rng):
    S = np.ascontiguousarray(rng.random((2000, 20)))

    def run(kern):
        idx = np.empty((S.shape[0], 5), dtype=np.int64)
        kern.knn_sorted(S, 5, idx)
        return (idx,)

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200_000,
                    help="rows for the split scan and prediction workloads")
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions, best is kept")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not numba_available():
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 1
    from crossphish import kernels_nb

    rng = np.random.default_rng(args.seed)
    workloads = [
        ("split scan", split_workload(rng, args.rows)),
    ]
    run_predict, run_shap = model_workloads(rng, args.rows)
    workloads += [
        ("predict margin", run_predict),
        ("shapley walk", run_shap),
        ("knn (2000x20, k=5)", knn_workload(rng)),
    ]

    print(f"{'kernel':<20} {'numpy':>10} {'numba':>10} {'speedup':>8}  equal")
    for name, run in workloads:
        out_np = run(kernels_np)
        out_nb = run(kernels_nb)  # warmup, triggers compilation
        equal = all(np.array_equal(a, b, equal_nan=True)
                    for a, b in zip(out_np, out_nb))
        t_np = timed(lambda: run(kernels_np), args.repeat)
        t_nb = timed(lambda: run(kernels_nb), args.repeat)
        print(f"{name:<20} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms "
              f"{t_np / t_nb:>7.1f}x  {'yes' if equal else 'NO'}")
        if not equal:
            print(f"backend outputs differ for {name}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
