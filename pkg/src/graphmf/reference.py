"""Dense closed-form references for small problems.

Everything here materializes the full block system, so it is strictly for
tests and diagnostics; the production solvers never call into this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .sparse import GraphSI, SparseMatrix


def dense_prior(n, graph: GraphSI | None, w_graph, w_l2):
    """The per-column prior precision as a dense matrix."""
    out = w_l2 * np.eye(n)
    if graph is not None:
        if graph.n_nodes != n:
            raise InputError("graph size mismatch")
        out += w_graph * graph.laplacian_reg.to_dense()
    return out


@dataclass(eq=False)
class PosteriorOracle:
    """Dense posterior precision and mean for one side, other side fixed.

    Layout is row-major: unknown index i*D + d holds factor entry (i, d),
    so `mean.reshape(n, D)` recovers the factor matrix.
    """

    precision: np.ndarray
    mean: np.ndarray

    def mean_matrix(self, n, d):
        return self.mean.reshape(n, d)


def posterior_oracle(obs_view: SparseMatrix, fixed, graph: GraphSI | None,
                     alpha, w_graph, w_l2) -> PosteriorOracle:
    """Build the exact block posterior for the side indexed by obs_view rows.

    precision = Prior kron I_D + alpha * blockdiag(B_i) with
    B_i = sum over observed (i, j) of fixed[j]^T fixed[j]; the mean solves
    precision @ x = alpha * vec(row-products of R with `fixed`).
    """
    fixed = np.asarray(fixed, dtype=np.float64)
    n = obs_view.n_rows
    d = fixed.shape[1]
    if obs_view.n_cols != fixed.shape[0]:
        raise InputError("fixed factor does not match observation columns")
    prior = dense_prior(n, graph, w_graph, w_l2)
    precision = np.kron(prior, np.eye(d))
    for i in range(n):
        lo, hi = obs_view.indptr[i], obs_view.indptr[i + 1]
        Vi = fixed[obs_view.indices[lo:hi]]
        precision[i * d:(i + 1) * d, i * d:(i + 1) * d] += alpha * (Vi.T @ Vi)
    rhs = alpha * obs_view.matmul_dense(fixed).reshape(-1)
    mean = np.linalg.solve(precision, rhs)
    return PosteriorOracle(precision, mean)


def cmatrix_blocks(obs_view: SparseMatrix, fixed, alpha):
    """Diagonal blocks of the column-stacked evidence matrix.

    Returns c with shape (D, D, n): block (d, d') is the n x n diagonal
    matrix diag(c[d, d']), c[d, d', i] = alpha * sum over observed (i, j)
    of fixed[j, d] * fixed[j, d'].
    """
    fixed = np.asarray(fixed, dtype=np.float64)
    n = obs_view.n_rows
    d = fixed.shape[1]
    out = np.zeros((d, d, n))
    for i in range(n):
        lo, hi = obs_view.indptr[i], obs_view.indptr[i + 1]
        Vi = fixed[obs_view.indices[lo:hi]]
        out[:, :, i] = alpha * (Vi.T @ Vi)
    return out


def column_precision_dense(graph: GraphSI | None, n, evidence_col, alpha,
                           w_graph, w_l2=0.0):
    """Dense per-column posterior precision with off-diagonal evidence
    blocks zeroed: prior + alpha * diag(evidence_col)."""
    evidence_col = np.asarray(evidence_col, dtype=np.float64)
    if evidence_col.shape[0] != n:
        raise InputError("evidence vector has wrong length")
    return dense_prior(n, graph, w_graph, w_l2) + alpha * np.diag(evidence_col)
