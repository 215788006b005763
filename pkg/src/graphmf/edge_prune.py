"""Contested-edge removal: the M-step of the EM loop.

Pipeline per side: build one sparse posterior precision per latent column
(the column-wise independence approximation keeps them decoupled), factor
each with a shared fill-reducing ordering, draw K Gaussian samples through
the factor, and accumulate the expected sample covariance of the latent
columns restricted to the support of the constraint graph.  Edges whose
accumulated covariance falls below tau are dropped as contested; node
pairs outside the original support are never considered, so the output
support only ever shrinks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chol import CholeskyFactor, cholesky, min_degree_order
from .errors import InputError
from .sparse import (GraphSI, SparseMatrix, build_adjacency, edge_keys,
                     graph_from_adjacency)


@dataclass(eq=False)
class ColumnPosteriorPrecision:
    """w*L+ + alpha*diag(C_d) (+ optional ridge) for one latent column."""

    d: int
    matrix: SparseMatrix


def evidence_diagonal(obs_row_view: SparseMatrix, V):
    """Per-node evidence mass for every column: out[i, d] = sum over
    observed (i, j) of V[j, d]^2."""
    V = np.ascontiguousarray(V, dtype=np.float64)
    if obs_row_view.n_cols != V.shape[0]:
        raise InputError("factor rows do not match observation columns")
    ones = np.ones(obs_row_view.nnz)
    return _kernels.csr_dense_matmul(obs_row_view.indptr, obs_row_view.indices,
                                     ones, np.ascontiguousarray(V * V))


def column_precision(g: GraphSI, V, obs_row_view: SparseMatrix, alpha, w, d,
                     w_l2=0.0):
    """Posterior precision of latent column d under the diagonal-evidence
    approximation; support equals the support of the regularized Laplacian."""
    V = np.ascontiguousarray(V, dtype=np.float64)
    if not 0 <= d < V.shape[1]:
        raise InputError("column index out of range")
    if obs_row_view.n_rows != g.n_nodes:
        raise InputError("observation rows do not match the graph")
    if obs_row_view.n_cols != V.shape[0]:
        raise InputError("factor rows do not match observation columns")
    lap = g.laplacian_reg
    ev = _kernels.csr_matvec(obs_row_view.indptr, obs_row_view.indices,
                             np.ones(obs_row_view.nnz),
                             np.ascontiguousarray(V[:, d] ** 2))
    data = w * lap.data
    data[lap.diagonal_positions()] += alpha * ev + w_l2
    mat = SparseMatrix(lap.n_rows, lap.n_cols, lap.indptr, lap.indices, data)
    return ColumnPosteriorPrecision(int(d), mat)


def sparse_cholesky(p: ColumnPosteriorPrecision, order=None) -> CholeskyFactor:
    """Factor a column precision with a fill-reducing permutation."""
    return cholesky(p.matrix, order=order)


def sample_column(chol: CholeskyFactor, rng, k):
    """Draw k samples x ~ N(0, M^{-1}) through a precision factor."""
    if k < 1:
        raise InputError("sample count must be at least 1")
    return chol.sample(rng, int(k))


@dataclass(eq=False)
class ConstrainedSCM:
    """Expected sample covariance of the latent columns, stored only on the
    constraint support (upper-triangle pairs) plus the diagonal.  Symmetry
    is structural: (i, j) and (j, i) share one stored value."""

    n_nodes: int
    support: np.ndarray
    values: np.ndarray
    diag: np.ndarray

    @property
    def n_edges(self):
        return self.support.shape[0]


def constrained_scm(U_mean, column_samples, support, n_nodes=None):
    """Accumulate the constrained SCM from the posterior mean and per-column
    sample sets.

    `column_samples` iterates over one (n, K) array per latent column, or is
    None for mean-only mode (the covariance term dropped).  Only support
    entries and the diagonal are ever computed.
    """
    U_mean = np.ascontiguousarray(U_mean, dtype=np.float64)
    n, D = U_mean.shape
    if n_nodes is None:
        n_nodes = n
    if n_nodes != n:
        raise InputError("mean factor does not match node count")
    support = np.ascontiguousarray(support, dtype=np.int64).reshape(-1, 2)
    if support.shape[0] and (support.min() < 0 or support.max() >= n):
        raise InputError("support index out of range")
    if np.any(support[:, 0] >= support[:, 1]):
        raise InputError("support pairs must satisfy i < j")
    ei = np.ascontiguousarray(support[:, 0])
    ej = np.ascontiguousarray(support[:, 1])

    vals = _kernels.edge_dot(U_mean, ei, ej) / D
    diag = np.einsum("nd,nd->n", U_mean, U_mean) / D
    if column_samples is not None:
        seen = 0
        for X in column_samples:
            X = np.ascontiguousarray(X, dtype=np.float64)
            if X.shape[0] != n:
                raise InputError("sample block does not match node count")
            K = X.shape[1]
            vals += _kernels.edge_dot(X, ei, ej) / (K * D)
            diag += np.einsum("nk,nk->n", X, X) / (K * D)
            seen += 1
        if seen != D:
            raise InputError(f"expected {D} sample blocks, got {seen}")
    return ConstrainedSCM(n, support, vals, diag)


@dataclass(eq=False)
class EdgeUpdateReport:
    """Outcome of one thresholding pass over the constraint support."""

    threshold: float
    edges: np.ndarray
    scm_values: np.ndarray
    kept_mask: np.ndarray

    @property
    def kept(self):
        return int(self.kept_mask.sum())

    @property
    def removed_contested(self):
        return int(self.kept_mask.shape[0] - self.kept_mask.sum())

    def rows(self):
        for (i, j), v, keep in zip(self.edges.tolist(),
                                   self.scm_values.tolist(),
                                   self.kept_mask.tolist()):
            yield i, j, v, "kept" if keep else "contested"


def write_report_csv(report: EdgeUpdateReport, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["i", "j", "scm_value", "decision"])
    for i, j, v, decision in report.rows():
        writer.writerow([i, j, repr(v), decision])


def threshold_edges(scm: ConstrainedSCM, a0: SparseMatrix, tau):
    """Keep the support edges whose SCM value is at least tau.

    Returns the new (shrunken) adjacency and the per-edge report.  Ties at
    exactly tau are kept.
    """
    rows = np.repeat(np.arange(a0.n_rows, dtype=np.int64), np.diff(a0.indptr))
    upper = a0.indices > rows
    a0_edges = np.column_stack((rows[upper], a0.indices[upper]))
    if a0_edges.shape != scm.support.shape or np.any(a0_edges != scm.support):
        raise InputError("SCM support does not match the constraint adjacency")
    kept_mask = scm.values >= tau
    new_adj = build_adjacency(scm.support[kept_mask], a0.n_rows)
    report = EdgeUpdateReport(float(tau), scm.support, scm.values.copy(),
                              kept_mask)
    return new_adj, report


def classify_edge_counts(new_adj: SparseMatrix, a0: SparseMatrix,
                         a_true: SparseMatrix):
    """Removal counts split by edge provenance.

    Returns a dict with removed/total counts for the corrupted edges of a0
    and for the true edges present in a0 (an edge absent from a0 can never
    be removed).
    """
    n = a0.n_rows
    if new_adj.n_rows != n or a_true.n_rows != n:
        raise InputError("adjacency sizes disagree")

    def upper_keys(adj):
        rows = np.repeat(np.arange(adj.n_rows, dtype=np.int64),
                         np.diff(adj.indptr))
        upper = adj.indices > rows
        return edge_keys(np.column_stack((rows[upper], adj.indices[upper])), n)

    k_new = upper_keys(new_adj)
    k_a0 = upper_keys(a0)
    k_true = upper_keys(a_true)
    if np.setdiff1d(k_new, k_a0).size:
        raise InputError("pruned adjacency contains edges outside the constraint")
    removed = np.setdiff1d(k_a0, k_new)
    corrupted = np.setdiff1d(k_a0, k_true)
    true_present = np.intersect1d(k_a0, k_true)
    return {"removed_ce": int(np.intersect1d(removed, corrupted).size),
            "total_ce": int(corrupted.size),
            "removed_te": int(np.intersect1d(removed, true_present).size),
            "total_te": int(true_present.size)}


def classify_edges(new_adj: SparseMatrix, a0: SparseMatrix,
                   a_true: SparseMatrix):
    """Fractions of corrupted and of available true edges that the prune
    removed; empty categories yield 0.0."""
    c = classify_edge_counts(new_adj, a0, a_true)
    frac_ce = c["removed_ce"] / c["total_ce"] if c["total_ce"] else 0.0
    frac_te = c["removed_te"] / c["total_te"] if c["total_te"] else 0.0
    return frac_ce, frac_te


def prune_side(current: GraphSI, constraint_adj: SparseMatrix, mean, other,
               obs_row_view: SparseMatrix, alpha, w_graph, tau, k_samples,
               rng, w_l2=0.0):
    """Full M-step for one side.

    `current` supplies the prior precision used in the E-step that produced
    `mean`; `constraint_adj` fixes which node pairs are candidates at all.
    Returns (new GraphSI, EdgeUpdateReport, ConstrainedSCM); streaming over
    latent columns keeps at most one sample block alive.
    """
    mean = np.ascontiguousarray(mean, dtype=np.float64)
    D = mean.shape[1]
    n = current.n_nodes
    if constraint_adj.n_rows != n or obs_row_view.n_rows != n or mean.shape[0] != n:
        raise InputError("graph, constraint, observations and mean disagree on size")
    rows = np.repeat(np.arange(constraint_adj.n_rows, dtype=np.int64),
                     np.diff(constraint_adj.indptr))
    upper = constraint_adj.indices > rows
    support = np.column_stack((rows[upper], constraint_adj.indices[upper]))

    if k_samples > 0:
        lap = current.laplacian_reg
        order = min_degree_order(lap.n_rows, lap.indptr, lap.indices)
        ev = evidence_diagonal(obs_row_view, other)
        diag_pos = lap.diagonal_positions()

        def blocks():
            for d in range(D):
                data = w_graph * lap.data
                data[diag_pos] += alpha * ev[:, d] + w_l2
                mat = SparseMatrix(lap.n_rows, lap.n_cols, lap.indptr,
                                   lap.indices, data)
                factor = cholesky(mat, order=order)
                yield factor.sample(rng, int(k_samples))

        scm = constrained_scm(mean, blocks(), support)
    else:
        scm = constrained_scm(mean, None, support)
    new_adj, report = threshold_edges(scm, constraint_adj, tau)
    new_graph = graph_from_adjacency(new_adj, current.gamma)
    return new_graph, report, scm
