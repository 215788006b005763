"""Sparse CSR containers, adjacency/Laplacian construction, observations.

CSR is the single canonical layout; anything that needs column-major access
stores an explicit transpose instead of growing CSC code paths.  Index
arrays are int64 and value arrays float64 throughout so they can be handed
to the compiled kernels without copies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError


def _index_array(a):
    out = np.ascontiguousarray(a, dtype=np.int64)
    if out.ndim != 1:
        raise InputError("expected a 1-d index array")
    return out


def _value_array(a):
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise InputError("expected a 1-d value array")
    return out


def _expand_rows(indptr):
    """Row index of every stored entry."""
    return np.repeat(np.arange(indptr.shape[0] - 1, dtype=np.int64),
                     np.diff(indptr))


class SparseMatrix:
    """CSR matrix with validated structure.

    Column indices are strictly increasing within each row.  Stored zeros
    are permitted (an observed value may legitimately be 0.0); callers that
    want a zero-free pattern use :meth:`compress`.  Instances are treated
    as immutable after construction.
    """

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "data")

    def __init__(self, n_rows, n_cols, indptr, indices, data):
        n_rows = int(n_rows)
        n_cols = int(n_cols)
        indptr = _index_array(indptr)
        indices = _index_array(indices)
        data = _value_array(data)
        if n_rows < 0 or n_cols < 0:
            raise InputError("matrix dimensions must be nonnegative")
        if indptr.shape[0] != n_rows + 1:
            raise InputError("row_offsets length must be n_rows + 1")
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise InputError("row_offsets must start at 0 and be non-decreasing")
        if indptr[-1] != indices.shape[0] or indices.shape[0] != data.shape[0]:
            raise InputError("row_offsets, col_indices and values disagree on nnz")
        if indices.shape[0]:
            if indices.min() < 0 or indices.max() >= n_cols:
                raise InputError("column index out of range")
            rows = _expand_rows(indptr)
            same = rows[1:] == rows[:-1]
            if np.any(indices[1:][same] <= indices[:-1][same]):
                raise InputError("column indices must be strictly increasing per row")
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.indptr = indptr
        self.indices = indices
        self.data = data

    @classmethod
    def from_coo(cls, rows, cols, vals, shape, sum_duplicates=False):
        """Build from triplet arrays; duplicates either error or merge."""
        rows = _index_array(rows)
        cols = _index_array(cols)
        vals = _value_array(vals)
        n_rows, n_cols = int(shape[0]), int(shape[1])
        if not (rows.shape[0] == cols.shape[0] == vals.shape[0]):
            raise InputError("triplet arrays must have equal length")
        if rows.shape[0]:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise InputError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise InputError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
        if dup.any():
            if not sum_duplicates:
                i = int(np.flatnonzero(dup)[0]) + 1
                raise InputError(
                    f"duplicate entry at ({rows[i]}, {cols[i]})")
            keep = np.concatenate(([True], ~dup))
            group = np.cumsum(keep) - 1
            vals = np.bincount(group, weights=vals)
            rows, cols = rows[keep], cols[keep]
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
        return cls(n_rows, n_cols, indptr, cols, vals)

    @property
    def nnz(self):
        return int(self.indptr[-1])

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def matvec(self, x):
        x = _value_array(x)
        if x.shape[0] != self.n_cols:
            raise InputError(
                f"dimension mismatch: matrix has {self.n_cols} columns, "
                f"vector has {x.shape[0]}")
        return _kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def matmul_dense(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.n_cols:
            raise InputError("dimension mismatch in sparse-dense product")
        return _kernels.csr_dense_matmul(self.indptr, self.indices, self.data, X)

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        out[_expand_rows(self.indptr), self.indices] = self.data
        return out

    def transpose(self):
        return SparseMatrix.from_coo(self.indices, _expand_rows(self.indptr),
                                     self.data, (self.n_cols, self.n_rows))

    def compress(self, tol=0.0):
        """Drop stored entries with |value| <= tol."""
        keep = np.abs(self.data) > tol
        rows = _expand_rows(self.indptr)[keep]
        return SparseMatrix.from_coo(rows, self.indices[keep], self.data[keep],
                                     self.shape)

    def diagonal_positions(self):
        """Entry positions of (i, i) for each row; requires a full diagonal."""
        if self.n_rows != self.n_cols:
            raise InputError("diagonal positions need a square matrix")
        rows = _expand_rows(self.indptr)
        pos = np.flatnonzero(self.indices == rows)
        if pos.shape[0] != self.n_rows:
            raise InputError("matrix is missing stored diagonal entries")
        return pos

    def permute_symmetric(self, perm):
        """Relabel rows and columns of a square matrix by `perm`.

        `perm[new] = old`; returns `(B, entry_map)` where B[p, q] =
        A[perm[p], perm[q]] and `B.data == A.data[entry_map]`, so callers
        can re-use the permuted pattern with fresh values.
        """
        if self.n_rows != self.n_cols:
            raise InputError("symmetric permutation needs a square matrix")
        perm = _index_array(perm)
        if perm.shape[0] != self.n_rows or np.any(np.sort(perm) != np.arange(self.n_rows)):
            raise InputError("perm must be a permutation of 0..n-1")
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.n_rows, dtype=np.int64)
        new_rows = inv[_expand_rows(self.indptr)]
        new_cols = inv[self.indices]
        order = np.lexsort((new_cols, new_rows))
        indptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(new_rows, minlength=self.n_rows), out=indptr[1:])
        mat = SparseMatrix(self.n_rows, self.n_cols, indptr,
                           new_cols[order], self.data[order])
        return mat, order


def spmv(m, x):
    """Sparse matrix-vector product y = m @ x."""
    return m.matvec(x)


def canonical_edges(edges, n_nodes):
    """Validate an undirected edge list and return it as a deduplicated
    (E, 2) int64 array with i < j, sorted lexicographically.

    Reversed duplicates collapse; self-loops and out-of-range endpoints
    raise InputError.
    """
    e = np.asarray(edges, dtype=np.int64)
    if e.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    e = np.atleast_2d(e)
    if e.ndim != 2 or e.shape[1] != 2:
        raise InputError("edge list must be a sequence of (i, j) pairs")
    if e.min() < 0 or e.max() >= n_nodes:
        raise InputError("edge endpoint out of range")
    if np.any(e[:, 0] == e[:, 1]):
        raise InputError("self-loops are not allowed")
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    keys = np.unique(lo * np.int64(n_nodes) + hi)
    return np.column_stack((keys // n_nodes, keys % n_nodes))


def edge_keys(edges, n_nodes):
    """Encode (i, j) pairs with i < j as scalar keys for set algebra."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return e[:, 0] * np.int64(n_nodes) + e[:, 1]


def edges_from_keys(keys, n_nodes):
    keys = np.asarray(keys, dtype=np.int64)
    return np.column_stack((keys // n_nodes, keys % n_nodes))


def build_adjacency(edges, n_nodes):
    """Symmetric 0/1 adjacency from an undirected edge list."""
    n_nodes = int(n_nodes)
    if n_nodes <= 0:
        raise InputError("n_nodes must be positive")
    pairs = canonical_edges(edges, n_nodes)
    rows = np.concatenate((pairs[:, 0], pairs[:, 1]))
    cols = np.concatenate((pairs[:, 1], pairs[:, 0]))
    return SparseMatrix.from_coo(rows, cols, np.ones(rows.shape[0]),
                                 (n_nodes, n_nodes))


def build_regularized_laplacian(adjacency, gamma):
    """D - A + gamma*I with gamma > 0; strictly diagonally dominant, hence
    positive-definite.  The diagonal is stored for every node."""
    if gamma <= 0:
        raise InputError("gamma must be positive")
    n = adjacency.n_rows
    if adjacency.n_cols != n:
        raise InputError("adjacency must be square")
    if np.any(adjacency.indices == _expand_rows(adjacency.indptr)):
        raise InputError("adjacency must have a zero diagonal")
    degrees = np.diff(adjacency.indptr).astype(np.float64)
    diag = np.arange(n, dtype=np.int64)
    rows = np.concatenate((_expand_rows(adjacency.indptr), diag))
    cols = np.concatenate((adjacency.indices, diag))
    vals = np.concatenate((-adjacency.data, degrees + float(gamma)))
    return SparseMatrix.from_coo(rows, cols, vals, (n, n))


@dataclass(frozen=True, eq=False)
class GraphSI:
    """Graph side information: adjacency plus its regularized Laplacian,
    which acts as the per-column prior precision."""

    n_nodes: int
    adjacency: SparseMatrix
    laplacian_reg: SparseMatrix
    gamma: float

    @property
    def n_edges(self):
        return self.adjacency.nnz // 2

    def edge_pairs(self):
        """Upper-triangle edges as an (E, 2) array, lexicographically sorted."""
        rows = _expand_rows(self.adjacency.indptr)
        upper = self.adjacency.indices > rows
        return np.column_stack((rows[upper], self.adjacency.indices[upper]))


def graph_from_adjacency(adjacency, gamma):
    return GraphSI(adjacency.n_rows, adjacency,
                   build_regularized_laplacian(adjacency, gamma), float(gamma))


def graph_from_edges(edges, n_nodes, gamma):
    return graph_from_adjacency(build_adjacency(edges, n_nodes), gamma)


@dataclass(eq=False)
class ObservationSet:
    """Observed entries of the ratings matrix in row- and column-major form.

    `rows`, `cols`, `values` hold the entries sorted row-major and line up
    with `row_view`'s storage order.  `col_view` is the stored transpose
    (shape n_cols x n_rows).
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    row_view: SparseMatrix
    col_view: SparseMatrix

    @property
    def nnz(self):
        return self.values.shape[0]


def observation_set(rows, cols, values, shape):
    """Assemble an ObservationSet; duplicate (i, j) pairs are an error."""
    rows = _index_array(rows)
    cols = _index_array(cols)
    values = _value_array(values)
    if values.size and not np.all(np.isfinite(values)):
        raise InputError("observation values must be finite")
    n_rows, n_cols = int(shape[0]), int(shape[1])
    row_view = SparseMatrix.from_coo(rows, cols, values, (n_rows, n_cols))
    col_view = row_view.transpose()
    sorted_rows = _expand_rows(row_view.indptr)
    return ObservationSet(n_rows, n_cols, sorted_rows, row_view.indices,
                          row_view.data, row_view, col_view)
