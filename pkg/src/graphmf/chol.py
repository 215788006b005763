"""Sparse Cholesky factorization with a fill-reducing ordering.

The ordering is a greedy exact-minimum-degree elimination (lazy heap,
deterministic index tie-break); the numeric factorization is the up-looking
kernel.  Factors of a precision matrix double as Gaussian samplers through
the standard identity: solving L^T y = z with z ~ N(0, I) and undoing the
permutation yields x ~ N(0, M^{-1}).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NumericalError
from .sparse import SparseMatrix, _expand_rows


def min_degree_order(n, indptr, indices):
    """Greedy minimum-degree elimination order for a symmetric pattern.

    Returns perm with perm[new] = old.  Exact degrees, clique fill on the
    eliminated node's neighborhood, ties broken by smallest node index.
    """
    nbrs = [set() for _ in range(n)]
    rows = _expand_rows(indptr)
    for i, j in zip(rows.tolist(), indices.tolist()):
        if i != j:
            nbrs[i].add(j)
    heap = [(len(nbrs[i]), i) for i in range(n)]
    heapq.heapify(heap)
    alive = np.ones(n, dtype=bool)
    perm = np.empty(n, dtype=np.int64)
    for k in range(n):
        while True:
            deg, v = heapq.heappop(heap)
            if alive[v] and deg == len(nbrs[v]):
                break
        perm[k] = v
        alive[v] = False
        ns = sorted(nbrs[v])
        for u in ns:
            nbrs[u].discard(v)
        for a_i in range(len(ns)):
            a = ns[a_i]
            for b_i in range(a_i + 1, len(ns)):
                b = ns[b_i]
                if b not in nbrs[a]:
                    nbrs[a].add(b)
                    nbrs[b].add(a)
        for u in ns:
            heapq.heappush(heap, (len(nbrs[u]), u))
        nbrs[v] = set()
    return perm


@dataclass(eq=False)
class CholeskyFactor:
    """P M P^T = L L^T with perm[new] = old.

    The factor is compressed-column with the diagonal entry first in each
    column and row indices increasing.
    """

    n: int
    perm: np.ndarray
    Lp: np.ndarray
    Li: np.ndarray
    Lx: np.ndarray

    @property
    def nnz(self):
        return int(self.Lp[-1])

    def solve(self, b):
        """Solve M x = b for one vector (n,) or a block (n, k)."""
        b = np.asarray(b, dtype=np.float64)
        single = b.ndim == 1
        B = np.ascontiguousarray(b.reshape(self.n, -1))
        Y = _kernels.forward_solve_multi(self.Lp, self.Li, self.Lx, B[self.perm])
        Z = _kernels.backward_solve_multi(self.Lp, self.Li, self.Lx, Y)
        out = np.empty_like(Z)
        out[self.perm] = Z
        return out[:, 0] if single else out

    def sample(self, rng, k):
        """Draw k columns x ~ N(0, M^{-1}); returns (n, k)."""
        z = rng.standard_normal((self.n, k))
        y = _kernels.backward_solve_multi(self.Lp, self.Li, self.Lx, z)
        out = np.empty_like(y)
        out[self.perm] = y
        return out

    def dense_factor(self):
        """The factor L as a dense array (diagnostic use)."""
        L = np.zeros((self.n, self.n))
        cols = np.repeat(np.arange(self.n), np.diff(self.Lp))
        L[self.Li, cols] = self.Lx
        return L


def cholesky(mat: SparseMatrix, order=None) -> CholeskyFactor:
    """Factor a symmetric positive-definite SparseMatrix.

    `order` overrides the fill-reducing permutation (identity for tests,
    or a precomputed ordering reused across many matrices with the same
    pattern).  Raises NumericalError naming the offending node if a pivot
    is not strictly positive.
    """
    n = mat.n_rows
    if order is None:
        order = min_degree_order(n, mat.indptr, mat.indices)
    else:
        order = np.ascontiguousarray(order, dtype=np.int64)
    permuted, _ = mat.permute_symmetric(order)
    try:
        Lp, Li, Lx = _kernels.chol_factor(n, permuted.indptr, permuted.indices,
                                          permuted.data)
    except ValueError as exc:
        node = int(order[exc.args[1]]) if len(exc.args) > 1 else -1
        raise NumericalError(
            f"matrix is not positive definite at node {node}") from exc
    return CholeskyFactor(n, order, Lp, Li, Lx)
