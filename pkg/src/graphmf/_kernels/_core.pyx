# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Mirrors graphmf._kernels.fallback function for function; that module is the
reference for semantics.  Loops here are written per entry, so each backend
is deterministic on its own but the two agree only to roundoff.
"""

from libc.math cimport sqrt

import numpy as np


def csr_matvec(long long[::1] indptr, long long[::1] indices,
               double[::1] data, double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, p
    cdef double acc
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        out[i] = acc
    return out_arr


def csr_dense_matmul(long long[::1] indptr, long long[::1] indices,
                     double[::1] data, double[:, ::1] X):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = X.shape[1]
    out_arr = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, p, c, j
    cdef double a
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            a = data[p]
            for c in range(k):
                out[i, c] += a * X[j, c]
    return out_arr


def predict_entries(long long[::1] indptr, long long[::1] indices,
                    double[:, ::1] U, double[:, ::1] V):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = U.shape[1]
    out_arr = np.empty(indices.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, p, c, j
    cdef double acc
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            acc = 0.0
            for c in range(d):
                acc += U[i, c] * V[j, c]
            out[p] = acc
    return out_arr


def gram_apply(long long[::1] indptr, long long[::1] indices,
               double[:, ::1] U, double[:, ::1] V):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = U.shape[1]
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, p, c, j
    cdef double acc
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            acc = 0.0
            for c in range(d):
                acc += U[i, c] * V[j, c]
            for c in range(d):
                out[i, c] += acc * V[j, c]
    return out_arr


cdef void _etree(Py_ssize_t n, long long[::1] indptr, long long[::1] indices,
                 long long[::1] parent, long long[::1] ancestor):
    cdef Py_ssize_t k, p
    cdef long long i, nxt
    for k in range(n):
        parent[k] = -1
        ancestor[k] = -1
    for k in range(n):
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt


cdef Py_ssize_t _ereach(Py_ssize_t k, long long[::1] indptr,
                        long long[::1] indices, long long[::1] parent,
                        long long[::1] flag, long long[::1] path,
                        long long[::1] pattern):
    cdef Py_ssize_t n = flag.shape[0]
    cdef Py_ssize_t top = n
    cdef Py_ssize_t p, length
    cdef long long i
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


def chol_factor(Py_ssize_t n, long long[::1] indptr, long long[::1] indices,
                double[::1] data):
    work_arr = np.empty((5, n), dtype=np.int64)
    cdef long long[::1] parent = work_arr[0]
    cdef long long[::1] flag = work_arr[1]
    cdef long long[::1] path = work_arr[2]
    cdef long long[::1] pattern = work_arr[3]
    cdef long long[::1] counts = work_arr[4]

    _etree(n, indptr, indices, parent, flag)

    cdef Py_ssize_t k, t, p, top
    for k in range(n):
        flag[k] = -1
        counts[k] = 1
    for k in range(n):
        top = _ereach(k, indptr, indices, parent, flag, path, pattern)
        for t in range(top, n):
            counts[pattern[t]] += 1

    Lp_arr = np.zeros(n + 1, dtype=np.int64)
    cdef long long[::1] Lp = Lp_arr
    for k in range(n):
        Lp[k + 1] = Lp[k] + counts[k]
    Li_arr = np.empty(Lp[n], dtype=np.int64)
    Lx_arr = np.zeros(Lp[n], dtype=np.float64)
    cdef long long[::1] Li = Li_arr
    cdef double[::1] Lx = Lx_arr
    nxt_arr = np.asarray(Lp_arr[:n]).copy()
    cdef long long[::1] nxt = nxt_arr

    x_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef long long i, j
    cdef double d, lkj
    for k in range(n):
        flag[k] = -1
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
        Lx[p] = sqrt(d)
    return Lp_arr, Li_arr, Lx_arr


def forward_solve_multi(long long[::1] Lp, long long[::1] Li,
                        double[::1] Lx, double[:, ::1] B):
    cdef Py_ssize_t n = Lp.shape[0] - 1
    cdef Py_ssize_t k = B.shape[1]
    Y_arr = np.array(B, dtype=np.float64, copy=True)
    cdef double[:, ::1] Y = Y_arr
    cdef Py_ssize_t j, p, c
    cdef long long r
    cdef double dj, l
    for j in range(n):
        dj = Lx[Lp[j]]
        for c in range(k):
            Y[j, c] /= dj
        for p in range(Lp[j] + 1, Lp[j + 1]):
            r = Li[p]
            l = Lx[p]
            for c in range(k):
                Y[r, c] -= l * Y[j, c]
    return Y_arr


def backward_solve_multi(long long[::1] Lp, long long[::1] Li,
                         double[::1] Lx, double[:, ::1] Z):
    cdef Py_ssize_t n = Lp.shape[0] - 1
    cdef Py_ssize_t k = Z.shape[1]
    Y_arr = np.array(Z, dtype=np.float64, copy=True)
    cdef double[:, ::1] Y = Y_arr
    cdef Py_ssize_t j, p, c
    cdef long long r
    cdef double dj, l
    for j in range(n - 1, -1, -1):
        for p in range(Lp[j] + 1, Lp[j + 1]):
            r = Li[p]
            l = Lx[p]
            for c in range(k):
                Y[j, c] -= l * Y[r, c]
        dj = Lx[Lp[j]]
        for c in range(k):
            Y[j, c] /= dj
    return Y_arr


def edge_dot(double[:, ::1] Y, long long[::1] ei, long long[::1] ej):
    cdef Py_ssize_t ne = ei.shape[0]
    cdef Py_ssize_t k = Y.shape[1]
    out_arr = np.empty(ne, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t e, c
    cdef long long a, b
    cdef double acc
    for e in range(ne):
        a = ei[e]
        b = ej[e]
        acc = 0.0
        for c in range(k):
            acc += Y[a, c] * Y[b, c]
        out[e] = acc
    return out_arr
