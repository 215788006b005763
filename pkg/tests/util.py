"""Random problem generators shared across test modules.

Everything takes an explicit Generator so failures reproduce from the
seed used in the calling test.
"""

import numpy as np

import graphmf as g


def random_pairs(n, count, rng):
    """`count` distinct undirected pairs (i < j) on n nodes."""
    if count > n * (n - 1) // 2:
        raise ValueError(f"cannot draw {count} distinct pairs on {n} nodes")
    seen = set()
    while len(seen) < count:
        i, j = (int(x) for x in rng.integers(0, n, 2))
        if i != j:
            seen.add((min(i, j), max(i, j)))
    return sorted(seen)


def random_graph(n, n_edges, rng, gamma=1.0):
    return g.graph_from_edges(random_pairs(n, n_edges, rng), n, gamma)


def random_sparse(n, m, k, rng, scale=1.0):
    idx = rng.choice(n * m, size=k, replace=False)
    vals = rng.normal(0.0, scale, k)
    return g.SparseMatrix.from_coo(idx // m, idx % m, vals, (n, m))


def random_observations(n, m, k, rng, scale=1.0):
    idx = rng.choice(n * m, size=k, replace=False)
    vals = rng.normal(0.0, scale, k)
    return g.observation_set(idx // m, idx % m, vals, (n, m))


def random_spd_sparse(n, n_offdiag, rng, shift=0.1):
    """Sparse SPD matrix: A@A.T structure is overkill, so build a
    diagonally dominant symmetric matrix on a random support instead."""
    pairs = random_pairs(n, n_offdiag, rng)
    rows = [p[0] for p in pairs] + [p[1] for p in pairs]
    cols = [p[1] for p in pairs] + [p[0] for p in pairs]
    vals = list(rng.normal(0.0, 1.0, len(pairs)))
    vals = vals + vals
    dense = np.zeros((n, n))
    dense[rows, cols] = vals
    diag = np.abs(dense).sum(axis=1) + shift + rng.uniform(0, 1, n)
    rows += list(range(n))
    cols += list(range(n))
    vals += list(diag)
    return g.SparseMatrix.from_coo(rows, cols, vals, (n, n))


def settings(**kw):
    """SolverSettings with tight CG defaults for oracle comparisons."""
    base = dict(cg_max_iters=500, cg_rel_tol=1e-12)
    base.update(kw)
    return g.SolverSettings(**base)
