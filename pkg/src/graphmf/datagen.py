"""Synthetic data: block ground-truth graphs, controlled edge corruption,
prior factor sampling, non-uniform observation sampling, and the sweep
harness used for the fidelity/noise/density/capacity studies."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .chol import cholesky
from .driver import GraemConfig, run_baseline, run_graem
from .edge_prune import classify_edge_counts
from .errors import InputError
from .sparse import (GraphSI, ObservationSet, edge_keys, edges_from_keys,
                     graph_from_adjacency, graph_from_edges, observation_set)

SWEEP_AXES = ("fidelity", "sigma2_obs", "frac_observed", "d")
SWEEP_MODELS = ("pmf", "grals", "grals-true-graph", "gpmf")


@dataclass(frozen=True)
class SynthConfig:
    """Generation settings; defaults mirror the standard synthetic setup:
    400x400, 40 latent dims, fidelity 0.7, noise 0.01, 7% observed."""

    n: int = 400
    m: int = 400
    d: int = 40
    fidelity: float = 0.7
    sigma2_obs: float = 0.01
    frac_observed: float = 0.07
    block_size: int = 10
    gamma: float = 1.0
    within_block_noise: float = 1e-4
    dirichlet_conc: float = 1.0
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.m < 2 or self.d < 1:
            raise InputError("need n, m >= 2 and d >= 1")
        if not 0.0 <= self.fidelity <= 1.0:
            raise InputError("fidelity must lie in [0, 1]")
        if self.sigma2_obs <= 0:
            raise InputError("sigma2_obs must be positive")
        if not 0.0 < self.frac_observed < 1.0:
            raise InputError("frac_observed must lie in (0, 1)")
        if self.frac_observed * self.n * self.m < 1:
            raise InputError("frac_observed leaves no observations")
        if self.block_size < 2:
            raise InputError("block_size must be at least 2")
        if self.gamma <= 0:
            raise InputError("gamma must be positive")
        if self.within_block_noise < 0:
            raise InputError("within_block_noise must be nonnegative")
        if self.dirichlet_conc <= 0:
            raise InputError("dirichlet_conc must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise InputError("train_fraction must lie in (0, 1)")


@dataclass(eq=False)
class SynthDataset:
    config: SynthConfig
    obs_train: ObservationSet
    obs_valid: ObservationSet
    gU_true: GraphSI
    gV_true: GraphSI
    gU_corrupted: GraphSI
    gV_corrupted: GraphSI
    corrupted_edges_u: np.ndarray
    corrupted_edges_v: np.ndarray
    U_true: np.ndarray
    V_true: np.ndarray


def make_block_graph(n, block_size, gamma=1.0):
    """Disjoint cliques over consecutive index blocks; a short last block
    is allowed (a singleton block simply has no edges)."""
    if block_size > n:
        raise InputError("block_size exceeds the node count")
    if block_size < 2:
        raise InputError("block_size must be at least 2")
    chunks = []
    for lo in range(0, n, block_size):
        hi = min(lo + block_size, n)
        a, b = np.triu_indices(hi - lo, k=1)
        chunks.append(np.column_stack((a + lo, b + lo)))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), np.int64)
    return graph_from_edges(edges, n, gamma)


def _sample_non_edges(n, true_keys, count, rng):
    """Uniformly pick `count` distinct node pairs absent from `true_keys`."""
    total_pairs = n * (n - 1) // 2
    if count > total_pairs - true_keys.shape[0]:
        raise InputError("graph too dense to insert the requested edges")
    if total_pairs <= 500_000:
        a, b = np.triu_indices(n, k=1)
        pool = np.setdiff1d(edge_keys(np.column_stack((a, b)), n), true_keys)
        return rng.choice(pool, size=count, replace=False)
    chosen = np.empty(0, dtype=np.int64)
    while chosen.shape[0] < count:
        draw = rng.integers(0, n, size=(4 * count, 2))
        draw = draw[draw[:, 0] != draw[:, 1]]
        lo = np.minimum(draw[:, 0], draw[:, 1])
        hi = np.maximum(draw[:, 0], draw[:, 1])
        keys = lo * np.int64(n) + hi
        keys = np.setdiff1d(keys, true_keys)  # also dedupes
        keys = np.setdiff1d(keys, chosen)
        chosen = np.concatenate((chosen, rng.permutation(keys)))
    return chosen[:count]


def corrupt_graph(g_true: GraphSI, fidelity, rng):
    """Replace round((1 - fidelity) * E) uniformly chosen true edges with
    the same number of uniformly chosen non-edges.  Edge count is
    preserved and the inserted set is disjoint from the true edges."""
    if not 0.0 <= fidelity <= 1.0:
        raise InputError("fidelity must lie in [0, 1]")
    n = g_true.n_nodes
    true_edges = g_true.edge_pairs()
    n_edges = true_edges.shape[0]
    n_replace = int(round((1.0 - fidelity) * n_edges))
    if n_replace == 0:
        return (graph_from_adjacency(g_true.adjacency, g_true.gamma),
                np.empty((0, 2), dtype=np.int64))
    drop = rng.choice(n_edges, size=n_replace, replace=False)
    keep_mask = np.ones(n_edges, dtype=bool)
    keep_mask[drop] = False
    true_keys = edge_keys(true_edges, n)
    inserted = _sample_non_edges(n, true_keys, n_replace, rng)
    new_keys = np.concatenate((true_keys[keep_mask], inserted))
    graph = graph_from_edges(edges_from_keys(new_keys, n), n, g_true.gamma)
    return graph, edges_from_keys(np.sort(inserted), n)


def sample_factors(g: GraphSI, d, within_block_noise, rng):
    """Draw a factor matrix whose columns follow N(0, inverse of the
    regularized Laplacian), plus optional i.i.d. jitter."""
    factor = cholesky(g.laplacian_reg)
    X = factor.sample(rng, int(d))
    if within_block_noise > 0:
        X += math.sqrt(within_block_noise) * rng.standard_normal(X.shape)
    return X


def sample_observations(U, V, sigma2_obs, frac_observed, dirichlet_conc,
                        split_ratio, rng):
    """Sample observed entries without replacement under product weights
    drawn from symmetric Dirichlets, add Gaussian noise, and split.

    Uses the Gumbel top-k trick: adding Gumbel noise to the log-weights and
    taking the top `count` indices is an exact without-replacement sample.
    """
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    n, m = U.shape[0], V.shape[0]
    count = int(round(frac_observed * n * m))
    if count < 1 or count > n * m:
        raise InputError("requested observation count is infeasible")
    if not 0.0 < split_ratio <= 1.0:
        raise InputError("split_ratio must lie in (0, 1]")
    p = rng.dirichlet(np.full(n, float(dirichlet_conc)))
    q = rng.dirichlet(np.full(m, float(dirichlet_conc)))
    logw = (np.log(np.clip(p, 1e-300, None))[:, None]
            + np.log(np.clip(q, 1e-300, None))[None, :])
    gumbel = -np.log(-np.log(rng.random((n, m))))
    flat = (logw + gumbel).ravel()
    idx = np.argpartition(flat, flat.shape[0] - count)[-count:]
    rows = idx // m
    cols = idx % m
    vals = np.einsum("ed,ed->e", U[rows], V[cols])
    if sigma2_obs > 0:
        vals = vals + math.sqrt(sigma2_obs) * rng.standard_normal(count)
    n_train = int(round(split_ratio * count))
    n_train = min(max(n_train, 1), count)
    order = rng.permutation(count)
    tr, va = order[:n_train], order[n_train:]
    obs_train = observation_set(rows[tr], cols[tr], vals[tr], (n, m))
    obs_valid = observation_set(rows[va], cols[va], vals[va], (n, m))
    return obs_train, obs_valid


def make_synth_dataset(cfg: SynthConfig) -> SynthDataset:
    """End-to-end generation: true graphs, corrupted graphs, factors drawn
    from the true priors, observations, train/validation split."""
    rng = np.random.default_rng(cfg.seed)
    gU_true = make_block_graph(cfg.n, cfg.block_size, cfg.gamma)
    gV_true = make_block_graph(cfg.m, cfg.block_size, cfg.gamma)
    gU_corr, ce_u = corrupt_graph(gU_true, cfg.fidelity, rng)
    gV_corr, ce_v = corrupt_graph(gV_true, cfg.fidelity, rng)
    U_true = sample_factors(gU_true, cfg.d, cfg.within_block_noise, rng)
    V_true = sample_factors(gV_true, cfg.d, cfg.within_block_noise, rng)
    obs_train, obs_valid = sample_observations(
        U_true, V_true, cfg.sigma2_obs, cfg.frac_observed, cfg.dirichlet_conc,
        cfg.train_fraction, rng)
    return SynthDataset(cfg, obs_train, obs_valid, gU_true, gV_true,
                        gU_corr, gV_corr, ce_u, ce_v, U_true, V_true)


def _cell_seeds(base_seed, axis, value, repeat):
    """Independent, reproducible seeds for one sweep cell."""
    axis_id = SWEEP_AXES.index(axis)
    value_bits = int(np.float64(value).view(np.uint64))
    ss = np.random.SeedSequence([int(base_seed), axis_id, value_bits,
                                 int(repeat)])
    data_seed, train_seed = (int(s) for s in ss.generate_state(2))
    return data_seed, train_seed


def _train_config(train: GraemConfig, axis, value, data_cfg: SynthConfig,
                  seed) -> GraemConfig:
    """Per-cell training config: capacity, noise level and gamma follow the
    generated data (matched-model protocol); the rest comes from `train`."""
    return replace(train, seed=seed, gamma=data_cfg.gamma,
                   sigma2=data_cfg.sigma2_obs,
                   d=int(value) if axis == "d" else data_cfg.d)


@dataclass(eq=False)
class SweepResult:
    """Per-run rows plus aggregate statistics for one sweep."""

    axis: str
    rows: list

    COLUMNS = ("axis_value", "model", "repeat", "rmse",
               "ce_removed_frac", "te_removed_frac", "seconds")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows:
            w.writerow([_csv_cell(row[c]) for c in self.COLUMNS])
        return buf.getvalue()

    def summary_rows(self):
        """Mean and sample std of RMSE (and mean removal fractions) per
        (axis_value, model) cell, in first-seen order."""
        groups = {}
        for row in self.rows:
            groups.setdefault((row["axis_value"], row["model"]), []).append(row)
        out = []
        for (value, model), rows in groups.items():
            rmses = np.array([r["rmse"] for r in rows])
            rec = {"axis_value": value, "model": model,
                   "n_repeats": len(rows),
                   "rmse_mean": float(rmses.mean()),
                   "rmse_std": float(rmses.std(ddof=1)) if len(rows) > 1 else 0.0}
            fracs = [(r["ce_removed_frac"], r["te_removed_frac"])
                     for r in rows if r["ce_removed_frac"] is not None]
            if fracs:
                rec["ce_removed_mean"] = float(np.mean([f[0] for f in fracs]))
                rec["te_removed_mean"] = float(np.mean([f[1] for f in fracs]))
            else:
                rec["ce_removed_mean"] = None
                rec["te_removed_mean"] = None
            out.append(rec)
        return out

    def summary_csv(self):
        cols = ("axis_value", "model", "n_repeats", "rmse_mean", "rmse_std",
                "ce_removed_mean", "te_removed_mean")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for rec in self.summary_rows():
            w.writerow([_csv_cell(rec[c]) for c in cols])
        return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _pooled_removal_fracs(result, data: SynthDataset):
    counts = {"removed_ce": 0, "total_ce": 0, "removed_te": 0, "total_te": 0}
    pairs = (("u", data.gU_corrupted, data.gU_true),
             ("v", data.gV_corrupted, data.gV_true))
    for side, g_corr, g_true in pairs:
        g_new = result.updated_graphs.get(side)
        if g_new is None:
            continue
        c = classify_edge_counts(g_new.adjacency, g_corr.adjacency,
                                 g_true.adjacency)
        for k in counts:
            counts[k] += c[k]
    if counts["total_ce"] == 0 and counts["total_te"] == 0:
        return None, None
    ce = (counts["removed_ce"] / counts["total_ce"]
          if counts["total_ce"] else 0.0)
    te = (counts["removed_te"] / counts["total_te"]
          if counts["total_te"] else 0.0)
    return ce, te


def run_sweep(axis, values, base: SynthConfig, repeats,
              train: GraemConfig | None = None,
              models=SWEEP_MODELS) -> SweepResult:
    """Train every model on every (axis value, repeat) cell.

    Each cell generates one dataset from a seed derived from (base seed,
    axis, value, repeat); all models share that dataset and the same
    training seed, so comparisons are paired.  The `d` axis varies the
    model capacity only -- the data keep the base latent dimension.
    """
    if axis not in SWEEP_AXES:
        raise InputError(f"unknown sweep axis {axis!r}")
    values = list(values)
    if not values:
        raise InputError("sweep needs at least one axis value")
    if repeats < 1:
        raise InputError("repeats must be at least 1")
    for model in models:
        if model not in SWEEP_MODELS:
            raise InputError(f"unknown model {model!r}")
    if train is None:
        train = GraemConfig()
    rows = []
    for value in values:
        for repeat in range(repeats):
            data_seed, train_seed = _cell_seeds(base.seed, axis, value, repeat)
            data_updates = {"seed": data_seed}
            if axis != "d":
                data_updates[axis] = type(getattr(base, axis))(value)
            data_cfg = replace(base, **data_updates)
            data = make_synth_dataset(data_cfg)
            cfg = _train_config(train, axis, value, data_cfg, train_seed)
            for model in models:
                t0 = time.perf_counter()
                if model == "pmf":
                    res = run_baseline(data.obs_train, None, None, cfg,
                                       data.obs_valid, mode="pmf")
                elif model == "grals":
                    res = run_baseline(data.obs_train, data.gU_corrupted,
                                       data.gV_corrupted, cfg,
                                       data.obs_valid, mode="grals")
                elif model == "grals-true-graph":
                    res = run_baseline(data.obs_train, data.gU_true,
                                       data.gV_true, cfg,
                                       data.obs_valid, mode="grals")
                else:
                    res = run_graem(data.obs_train, data.gU_corrupted,
                                    data.gV_corrupted, cfg, data.obs_valid)
                seconds = time.perf_counter() - t0
                ce, te = _pooled_removal_fracs(res, data)
                rows.append({"axis_value": float(value), "model": model,
                             "repeat": repeat, "rmse": res.final_rmse,
                             "ce_removed_frac": ce, "te_removed_frac": te,
                             "seconds": seconds})
    return SweepResult(axis, rows)
