#!/usr/bin/env python3
"""Time every kernel under both backends and report the speedup.

The compiled extension and the numpy fallback expose the same eight
functions, so each row times one function on one shared input set.
`--end-to-end` additionally times a full training run per backend in a
subprocess (the backend is fixed at import time, hence the indirection).

Typical use:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --scale 2 --reps 5 --end-to-end
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from graphmf._kernels import fallback
from graphmf.chol import cholesky, min_degree_order
from graphmf.datagen import make_block_graph

try:
    from graphmf._kernels import _core
except ImportError:
    _core = None


def best_of(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(scale):
    """One (name, description, callable-factory) set shared by both
    backends; sizes follow the default synthetic workload."""
    rng = np.random.default_rng(0)
    n = 1000 * scale
    m = 1000 * scale
    d = 40

    graph = make_block_graph(n, 10)
    lap = graph.laplacian_reg

    nnz = int(0.05 * n * m)
    idx = rng.choice(n * m, size=nnz, replace=False)
    rows, cols = idx // m, idx % m
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    indices = np.ascontiguousarray(cols)
    vals = rng.standard_normal(nnz)

    U = rng.standard_normal((n, d))
    V = rng.standard_normal((m, d))
    x = rng.standard_normal(n)
    B = rng.standard_normal((n, d))
    pairs = graph.edge_pairs()
    ei = np.ascontiguousarray(pairs[:, 0])
    ej = np.ascontiguousarray(pairs[:, 1])

    # factor once (backend-neutral inputs for the triangular solves)
    chol = cholesky(lap, order=min_degree_order(n, lap.indptr, lap.indices))
    perm_lap, _ = lap.permute_symmetric(chol.perm)

    def cases(k):
        yield ("csr_matvec", f"Laplacian {n}x{n}, nnz={lap.nnz}",
               lambda: k.csr_matvec(lap.indptr, lap.indices, lap.data, x))
        yield ("csr_dense_matmul", f"{n}x{m} ratings ({nnz} nnz) @ dense {m}x{d}",
               lambda: k.csr_dense_matmul(indptr, indices, vals, V))
        yield ("predict_entries", f"{nnz} entries, d={d}",
               lambda: k.predict_entries(indptr, indices, U, V))
        yield ("gram_apply", f"{nnz} nnz, d={d}",
               lambda: k.gram_apply(indptr, indices, U, V))
        yield ("chol_factor", f"permuted Laplacian {n}x{n}",
               lambda: k.chol_factor(n, perm_lap.indptr, perm_lap.indices,
                                     perm_lap.data))
        yield ("forward_solve_multi", f"{n}x{d} block",
               lambda: k.forward_solve_multi(chol.Lp, chol.Li, chol.Lx, B))
        yield ("backward_solve_multi", f"{n}x{d} block",
               lambda: k.backward_solve_multi(chol.Lp, chol.Li, chol.Lx, B))
        yield ("edge_dot", f"{len(pairs)} edges, d={d}",
               lambda: k.edge_dot(U, ei, ej))

    return cases


def run_kernel_table(scale, reps):
    cases = build_cases(scale)
    slow_cases = list(cases(fallback))
    fast_cases = list(cases(_core)) if _core is not None else None
    print(f"{'kernel':<22} {'problem':<38} {'fallback':>10} "
          f"{'compiled':>10} {'speedup':>8}")
    for idx, (name, desc, slow_fn) in enumerate(slow_cases):
        t_slow = best_of(slow_fn, reps)
        if fast_cases is None:
            print(f"{name:<22} {desc:<38} {t_slow * 1e3:>8.2f}ms "
                  f"{'-':>10} {'-':>8}")
            continue
        t_fast = best_of(fast_cases[idx][2], reps)
        print(f"{name:<22} {desc:<38} {t_slow * 1e3:>8.2f}ms "
              f"{t_fast * 1e3:>8.2f}ms {t_slow / t_fast:>7.1f}x")


_E2E_SNIPPET = """
import time
import graphmf as g
from graphmf._kernels import BACKEND

cfg = g.SynthConfig(n=200, m=200, d=10, block_size=10, frac_observed=0.1,
                    fidelity=0.7, seed=4)
data = g.make_synth_dataset(cfg)
train = g.GraemConfig(d=10, outer_sweeps=6, k_samples=30, seed=1,
                      reg_weight_graph_u=20.0, reg_weight_graph_v=20.0,
                      pmf_ridge=20.0)
t0 = time.perf_counter()
res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                  train, data.obs_valid)
print(f"  {BACKEND:<9} {time.perf_counter() - t0:6.2f}s  "
      f"heldout rmse {res.final_rmse:.4f}")
"""


def run_end_to_end():
    print("\nfull training run (200x200, d=10, one EM round):", flush=True)
    for backend in ("fallback", "compiled"):
        if backend == "compiled" and _core is None:
            print("  compiled   (extension not built)", flush=True)
            continue
        env = dict(os.environ, GRAPHMF_KERNELS=backend)
        subprocess.run([sys.executable, "-c", _E2E_SNIPPET], env=env,
                       check=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=int, default=1,
                    help="multiply the base problem sizes (default 1)")
    ap.add_argument("--reps", type=int, default=3,
                    help="best-of repetitions per measurement (default 3)")
    ap.add_argument("--end-to-end", action="store_true",
                    help="also time a full training run per backend")
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not available; timing the fallback only\n")
    run_kernel_table(args.scale, args.reps)
    if args.end_to_end:
        run_end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
