"""NumPy implementations of the numerical kernels.

This module is the reference for the kernel contract; the compiled extension
(`graphmf._kernels._core`) provides the same functions with C loops.  All
index arrays are int64, all value arrays are float64 and C-contiguous --
callers (the sparse containers) guarantee this.

Each backend is deterministic on its own; across backends results agree
only to floating-point roundoff because reduction order differs.
"""

import numpy as np


def _segment_sum(indptr, per_entry):
    """Sum `per_entry` over the CSR row segments defined by `indptr`.

    Works for 1-d (nnz,) and 2-d (nnz, k) inputs; empty rows sum to zero.
    """
    n = indptr.shape[0] - 1
    if per_entry.ndim == 1:
        out = np.zeros(n, dtype=np.float64)
    else:
        out = np.zeros((n, per_entry.shape[1]), dtype=np.float64)
    starts = indptr[:-1]
    nonempty = indptr[1:] > starts
    if per_entry.shape[0] == 0 or not nonempty.any():
        return out
    # reduceat segments run from one listed start to the next; skipped (empty)
    # rows contribute no entries in between, so this is exact.
    out[nonempty] = np.add.reduceat(per_entry, starts[nonempty], axis=0)
    return out


def _entry_rows(indptr):
    return np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))


def csr_matvec(indptr, indices, data, x):
    """y = A @ x for a CSR matrix A."""
    return _segment_sum(indptr, data * x[indices])


def csr_dense_matmul(indptr, indices, data, X):
    """Y = A @ X for CSR A (n_rows x n_cols) and dense X (n_cols, k)."""
    return _segment_sum(indptr, data[:, None] * X[indices, :])


def predict_entries(indptr, indices, U, V):
    """Per-entry factor products: p[e] = U[i] . V[j] for entry e=(i, j)."""
    rows = _entry_rows(indptr)
    return np.einsum("ed,ed->e", U[rows, :], V[indices, :])


def gram_apply(indptr, indices, U, V):
    """Row-wise Gram products: G[i] = sum_{j in row i} (U[i] . V[j]) V[j].

    Applies the per-row evidence blocks sum_j V[j]^T V[j] to U without
    forming them.
    """
    rows = _entry_rows(indptr)
    p = np.einsum("ed,ed->e", U[rows, :], V[indices, :])
    return _segment_sum(indptr, p[:, None] * V[indices, :])


def _etree(n, indptr, indices):
    """Elimination tree of a symmetric CSR matrix (lower-triangle reach)."""
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt
    return parent


def _ereach(k, indptr, indices, parent, flag, path, pattern):
    """Nonzero pattern of row k of the Cholesky factor.

    Returns `top`; the pattern occupies pattern[top:n] in topological order
    (every column appears after all its etree descendants in the set).
    """
    n = flag.shape[0]
    top = n
    flag[k] = k
    for p in range(indptr[k], indptr[k + 1]):
        i = indices[p]
        if i >= k:
            continue
        length = 0
        while flag[i] != k:
            path[length] = i
            length += 1
            flag[i] = k
            i = parent[i]
        while length > 0:
            length -= 1
            top -= 1
            pattern[top] = path[length]
    return top


def chol_factor(n, indptr, indices, data):
    """Up-looking sparse Cholesky A = L L^T of a full-stored symmetric SPD
    CSR matrix (no permutation applied here).

    Returns (Lp, Li, Lx): the factor in compressed-column form with the
    diagonal entry first in each column and row indices increasing.
    Raises ValueError (with the pivot index as second arg) if a pivot is
    not strictly positive.
    """
    parent = _etree(n, indptr, indices)
    flag = np.full(n, -1, dtype=np.int64)
    path = np.empty(n, dtype=np.int64)
    pattern = np.empty(n, dtype=np.int64)

    counts = np.ones(n, dtype=np.int64)  # one diagonal entry per column
    for k in range(n):
        top = _ereach(k, indptr, indices, parent, flag, path, pattern)
        for t in range(top, n):
            counts[pattern[t]] += 1

    Lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=Lp[1:])
    Li = np.empty(Lp[n], dtype=np.int64)
    Lx = np.zeros(Lp[n], dtype=np.float64)
    nxt = Lp[:n].copy()  # next free slot per column; slot Lp[j] is the diagonal

    flag.fill(-1)
    x = np.zeros(n, dtype=np.float64)
    for k in range(n):
        top = _ereach(k, indptr, indices, parent, flag, path, pattern)
        d = 0.0
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            if i < k:
                x[i] = data[p]
            elif i == k:
                d = data[p]
        for t in range(top, n):
            j = pattern[t]
            lkj = x[j] / Lx[Lp[j]]
            x[j] = 0.0
            for p in range(Lp[j] + 1, nxt[j]):
                x[Li[p]] -= Lx[p] * lkj
            d -= lkj * lkj
            p = nxt[j]
            nxt[j] += 1
            Li[p] = k
            Lx[p] = lkj
        if not d > 0.0:
            raise ValueError(f"matrix is not positive definite (pivot {k})", k)
        p = nxt[k]
        nxt[k] += 1
        Li[p] = k
        Lx[p] = np.sqrt(d)
    return Lp, Li, Lx


def forward_solve_multi(Lp, Li, Lx, B):
    """Solve L Y = B for k right-hand sides; B is (n, k)."""
    Y = B.copy()
    n = Lp.shape[0] - 1
    for j in range(n):
        Y[j] /= Lx[Lp[j]]
        lo, hi = Lp[j] + 1, Lp[j + 1]
        if hi > lo:
            Y[Li[lo:hi]] -= Lx[lo:hi, None] * Y[j]
    return Y


def backward_solve_multi(Lp, Li, Lx, Z):
    """Solve L^T Y = Z for k right-hand sides; Z is (n, k)."""
    Y = Z.copy()
    n = Lp.shape[0] - 1
    for j in range(n - 1, -1, -1):
        lo, hi = Lp[j] + 1, Lp[j + 1]
        if hi > lo:
            Y[j] -= Lx[lo:hi] @ Y[Li[lo:hi]]
        Y[j] /= Lx[Lp[j]]
    return Y


def edge_dot(Y, ei, ej):
    """Per-pair sample dots: out[e] = Y[ei[e]] . Y[ej[e]] for (n, k) Y.

    Chunked over the sample axis to bound temporaries at large k.
    """
    out = np.zeros(ei.shape[0], dtype=np.float64)
    k = Y.shape[1]
    step = 4096
    for c0 in range(0, k, step):
        Yc = Y[:, c0:c0 + step]
        out += np.einsum("ek,ek->e", Yc[ei, :], Yc[ej, :])
    return out
