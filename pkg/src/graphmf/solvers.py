"""Alternating least squares with optional graph regularization.

Each half-sweep solves one side's regularized least-squares problem with
the other side fixed.  The normal equations are SPD, so conjugate gradient
is applied to them directly, with the operator evaluated matrix-shaped:
per-row evidence products on the observation pattern plus the regularized
Laplacian times each factor column.  The huge block system is never formed.

Objective convention, with a = alpha = 1/sigma^2 and per-side weights
(w_g, w_l2):

    (a/2)||P_Omega(R - U V^T)||_F^2
      + sum over sides [ (w_g/2) tr(X^T L+ X) + (w_l2/2) ||X||_F^2 ]

The data term carries alpha so that the minimizer matches the posterior
mean of the generative model for any noise level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, InputError, NumericalError
from .sparse import GraphSI, ObservationSet, SparseMatrix


@dataclass(frozen=True)
class SolverSettings:
    """Knobs for the alternating solver.

    reg_weight_graph_* scales the Laplacian term of that side wholesale;
    reg_weight_l2_* adds a plain ridge on top (the only regularizer left
    when a side has no graph).
    """

    cg_max_iters: int = 200
    cg_rel_tol: float = 1e-4
    outer_sweeps: int = 10
    alpha: float = 1.0
    reg_weight_graph_u: float = 1.0
    reg_weight_graph_v: float = 1.0
    reg_weight_l2_u: float = 0.0
    reg_weight_l2_v: float = 0.0

    def __post_init__(self):
        if self.cg_max_iters < 1 or self.outer_sweeps < 1:
            raise ConfigError("iteration counts must be at least 1")
        if not 0.0 < self.cg_rel_tol < 1.0:
            raise ConfigError("cg_rel_tol must lie in (0, 1)")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        for w in (self.reg_weight_graph_u, self.reg_weight_graph_v,
                  self.reg_weight_l2_u, self.reg_weight_l2_v):
            if w < 0:
                raise ConfigError("regularization weights must be nonnegative")

    def side_weights(self, side):
        if side == "u":
            return self.reg_weight_graph_u, self.reg_weight_l2_u
        if side == "v":
            return self.reg_weight_graph_v, self.reg_weight_l2_v
        raise InputError(f"unknown side {side!r}")


def init_factors(n, m, d, rng):
    """Small random starting factors, std 0.1/sqrt(d)."""
    scale = 0.1 / np.sqrt(d)
    return (scale * rng.standard_normal((n, d)),
            scale * rng.standard_normal((m, d)))


def _check_shapes(U, V, obs):
    if U.ndim != 2 or V.ndim != 2 or U.shape[1] != V.shape[1]:
        raise InputError("factor matrices must be 2-d with equal latent dims")
    if U.shape[0] != obs.n_rows or V.shape[0] != obs.n_cols:
        raise InputError("factor shapes do not match the observation matrix")


def _graph_half_term(X, graph: GraphSI | None, w_graph, w_l2):
    val = 0.0
    if graph is not None and w_graph > 0:
        val += 0.5 * w_graph * float(np.sum(X * graph.laplacian_reg.matmul_dense(X)))
    if w_l2 > 0:
        val += 0.5 * w_l2 * float(np.sum(X * X))
    return val


def objective(U, V, obs: ObservationSet, gU: GraphSI | None,
              gV: GraphSI | None, s: SolverSettings):
    """Regularized squared-error objective at (U, V)."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    _check_shapes(U, V, obs)
    preds = _kernels.predict_entries(obs.row_view.indptr, obs.row_view.indices,
                                     U, V)
    resid = obs.values - preds
    val = 0.5 * s.alpha * float(resid @ resid)
    val += _graph_half_term(U, gU, *s.side_weights("u"))
    val += _graph_half_term(V, gV, *s.side_weights("v"))
    if not np.isfinite(val):
        raise NumericalError("objective is not finite")
    return val


def objective_grad(U, V, obs: ObservationSet, gU: GraphSI | None,
                   gV: GraphSI | None, s: SolverSettings):
    """Analytic gradient of `objective` with respect to U and V."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    _check_shapes(U, V, obs)
    rv = obs.row_view
    preds = _kernels.predict_entries(rv.indptr, rv.indices, U, V)
    resid = obs.values - preds
    gU_arr = -s.alpha * _kernels.csr_dense_matmul(rv.indptr, rv.indices, resid, V)
    to_col = np.lexsort((obs.rows, obs.cols))
    cv = obs.col_view
    gV_arr = -s.alpha * _kernels.csr_dense_matmul(cv.indptr, cv.indices,
                                                  np.ascontiguousarray(resid[to_col]), U)
    wg, wl2 = s.side_weights("u")
    if gU is not None and wg > 0:
        gU_arr += wg * gU.laplacian_reg.matmul_dense(U)
    if wl2 > 0:
        gU_arr += wl2 * U
    wg, wl2 = s.side_weights("v")
    if gV is not None and wg > 0:
        gV_arr += wg * gV.laplacian_reg.matmul_dense(V)
    if wl2 > 0:
        gV_arr += wl2 * V
    return gU_arr, gV_arr


def _cg_matrix(apply_op, rhs, x0, max_iters, rel_tol):
    """Conjugate gradient on an SPD operator over matrix-shaped unknowns.

    The inner product is the trace inner product sum(A*B).  Stops when the
    residual norm drops below rel_tol times the rhs norm.
    """
    b_norm = float(np.sqrt(np.sum(rhs * rhs)))
    if b_norm == 0.0:
        return np.zeros_like(rhs)
    x = x0.copy()
    r = rhs - apply_op(x)
    p = r.copy()
    rs = float(np.sum(r * r))
    tol2 = (rel_tol * b_norm) ** 2
    for it in range(max_iters):
        if not np.isfinite(rs):
            raise NumericalError(f"non-finite CG residual at iteration {it}")
        if rs <= tol2:
            break
        Ap = apply_op(p)
        denom = float(np.sum(p * Ap))
        if not np.isfinite(denom):
            raise NumericalError(f"non-finite CG curvature at iteration {it}")
        if denom <= 0.0:
            break
        step = rs / denom
        x += step * p
        r -= step * Ap
        rs_new = float(np.sum(r * r))
        p *= rs_new / rs
        p += r
        rs = rs_new
    return x


def solve_subproblem(fixed, obs_view: SparseMatrix, g: GraphSI | None,
                     s: SolverSettings, warm, side="u"):
    """Minimize the objective over one side with the other fixed.

    `obs_view` is the observation CSR whose rows index the side being
    solved; `fixed` is the other side's factor matrix; `warm` the starting
    iterate.  Returns the updated factor matrix.
    """
    fixed = np.ascontiguousarray(fixed, dtype=np.float64)
    warm = np.ascontiguousarray(warm, dtype=np.float64)
    n, d = warm.shape
    if obs_view.n_rows != n or obs_view.n_cols != fixed.shape[0]:
        raise InputError("observation view does not match factor shapes")
    if fixed.shape[1] != d:
        raise InputError("warm start has wrong latent dimension")
    w_graph, w_l2 = s.side_weights(side)
    if g is not None and g.n_nodes != n:
        raise InputError("graph size does not match the side being solved")

    alpha = s.alpha
    rhs = alpha * obs_view.matmul_dense(fixed)
    if g is None:
        # without a graph nothing couples empty rows to the data; their
        # minimizer is exactly zero, so pin them there from the start
        empty = np.diff(obs_view.indptr) == 0
        if empty.any():
            warm = warm.copy()
            warm[empty] = 0.0
        lap = None
    else:
        lap = g.laplacian_reg

    def apply_op(X):
        X = np.ascontiguousarray(X)
        out = alpha * _kernels.gram_apply(obs_view.indptr, obs_view.indices,
                                          X, fixed)
        if lap is not None and w_graph > 0:
            out += w_graph * lap.matmul_dense(X)
        if w_l2 > 0:
            out += w_l2 * X
        return out

    return _cg_matrix(apply_op, rhs, warm, s.cg_max_iters, s.cg_rel_tol)


def als_train(obs: ObservationSet, gU: GraphSI | None, gV: GraphSI | None,
              s: SolverSettings, init):
    """Alternate subproblem solves for `outer_sweeps` rounds.

    Returns (U, V, trace) where trace holds the objective at the start and
    after every half-sweep; warm starts make it non-increasing up to CG
    tolerance slack.
    """
    U, V = (np.array(init[0], dtype=np.float64, copy=True),
            np.array(init[1], dtype=np.float64, copy=True))
    _check_shapes(U, V, obs)
    trace = [objective(U, V, obs, gU, gV, s)]
    for _ in range(s.outer_sweeps):
        U = solve_subproblem(V, obs.row_view, gU, s, U, side="u")
        trace.append(objective(U, V, obs, gU, gV, s))
        V = solve_subproblem(U, obs.col_view, gV, s, V, side="v")
        trace.append(objective(U, V, obs, gU, gV, s))
    return U, V, trace


def predict_rmse(U, V, heldout: ObservationSet):
    """Root mean squared error over the held-out entries."""
    if heldout.nnz == 0:
        raise InputError("held-out set is empty")
    U = np.ascontiguousarray(U, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    _check_shapes(U, V, heldout)
    preds = _kernels.predict_entries(heldout.row_view.indptr,
                                     heldout.row_view.indices, U, V)
    resid = heldout.values - preds
    return float(np.sqrt(resid @ resid / resid.shape[0]))
