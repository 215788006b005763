"""Command-line interface: synth, train, prune, eval, sweep.

Exit codes: 0 success, 1 runtime failure (single-line diagnostic on
stderr), 2 usage errors.  Config files hold flat `key = value` lines;
explicit flags override file values.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as fio
from .datagen import (SWEEP_AXES, SWEEP_MODELS, SynthConfig,
                      make_synth_dataset, run_sweep)
from .driver import GraemConfig, run_baseline, run_graem, run_summary
from .edge_prune import prune_side, write_report_csv
from .errors import GraphMFError, InputError
from .solvers import predict_rmse
from .sparse import build_adjacency

_GRAEM_FLAGS = (
    ("--d", "d", int),
    ("--sigma2", "sigma2", float),
    ("--gamma", "gamma", float),
    ("--tau", "tau", float),
    ("--k-samples", "k_samples", int),
    ("--cg-iters", "cg_max_iters", int),
    ("--cg-tol", "cg_rel_tol", float),
    ("--sweeps", "outer_sweeps", int),
    ("--em-rounds", "em_max_rounds", int),
    ("--em-tol", "em_tol", float),
    ("--seed", "seed", int),
    ("--reg-graph-u", "reg_weight_graph_u", float),
    ("--reg-graph-v", "reg_weight_graph_v", float),
    ("--reg-l2-u", "reg_weight_l2_u", float),
    ("--reg-l2-v", "reg_weight_l2_v", float),
    ("--pmf-ridge", "pmf_ridge", float),
)

_SYNTH_FLAGS = (
    ("--n", "n", int),
    ("--m", "m", int),
    ("--d", "d", int),
    ("--fidelity", "fidelity", float),
    ("--sigma2-obs", "sigma2_obs", float),
    ("--frac-observed", "frac_observed", float),
    ("--block-size", "block_size", int),
    ("--gamma", "gamma", float),
    ("--within-block-noise", "within_block_noise", float),
    ("--dirichlet-conc", "dirichlet_conc", float),
    ("--train-fraction", "train_fraction", float),
    ("--seed", "seed", int),
)


def _add_flags(parser, flags, exclude=()):
    for flag, dest, typ in flags:
        if dest in exclude:
            continue
        parser.add_argument(flag, dest=dest, type=typ, default=None)


def _config_from_args(cls, args, flags, config_path=None):
    file_values = fio.read_config(config_path) if config_path else None
    overrides = {dest: getattr(args, dest, None) for _, dest, _ in flags}
    if cls is GraemConfig:
        overrides["readmit_edges"] = getattr(args, "readmit_edges", None)
    return fio.build_config(cls, file_values, overrides)


def _require_files(*paths):
    for p in paths:
        if p is not None and not os.path.isfile(p):
            raise InputError(f"input file not found: {p}")


def _factor_path(outdir, name, text):
    ext = "txt" if text else "bin"
    return os.path.join(outdir, f"{name}.{ext}")


def _cmd_synth(args):
    _require_files(args.config)
    cfg = _config_from_args(SynthConfig, args, _SYNTH_FLAGS, args.config)
    data = make_synth_dataset(cfg)
    os.makedirs(args.out, exist_ok=True)
    fio.write_triplets(data.obs_train, os.path.join(args.out, "train.txt"))
    fio.write_triplets(data.obs_valid, os.path.join(args.out, "valid.txt"))
    fio.write_edge_list(data.gU_corrupted, os.path.join(args.out, "graph_u.txt"))
    fio.write_edge_list(data.gV_corrupted, os.path.join(args.out, "graph_v.txt"))
    fio.write_edge_list(data.gU_true, os.path.join(args.out, "graph_u_true.txt"))
    fio.write_edge_list(data.gV_true, os.path.join(args.out, "graph_v_true.txt"))
    for name, pairs, n in (("corrupted_edges_u", data.corrupted_edges_u, cfg.n),
                           ("corrupted_edges_v", data.corrupted_edges_v, cfg.m)):
        fio.write_edge_list(build_adjacency(pairs, n),
                            os.path.join(args.out, f"{name}.txt"))
    fio.write_factors(_factor_path(args.out, "factors_u_true", args.text),
                      data.U_true, text=args.text)
    fio.write_factors(_factor_path(args.out, "factors_v_true", args.text),
                      data.V_true, text=args.text)
    echo = {f"config.{k}": v for k, v in vars(cfg).items()}
    echo["train_entries"] = data.obs_train.nnz
    echo["valid_entries"] = data.obs_valid.nnz
    fio.write_summary(os.path.join(args.out, "synth_config.txt"), echo)
    print(f"wrote synthetic bundle to {args.out} "
          f"({data.obs_train.nnz} train / {data.obs_valid.nnz} valid entries)")
    return 0


def _load_graphs(args, n_rows, n_cols, gamma):
    gU = gV = None
    if args.graph_u:
        gU = fio.read_edge_list(args.graph_u, n_rows, gamma)
    if args.graph_v:
        gV = fio.read_edge_list(args.graph_v, n_cols, gamma)
    return gU, gV


def _cmd_train(args):
    _require_files(args.config, args.train, args.valid, args.graph_u,
                   args.graph_v)
    cfg = _config_from_args(GraemConfig, args, _GRAEM_FLAGS, args.config)
    obs = fio.read_triplets(args.train, index_base=args.index_base)
    heldout = (fio.read_triplets(args.valid, index_base=args.index_base)
               if args.valid else None)
    gU, gV = _load_graphs(args, obs.n_rows, obs.n_cols, cfg.gamma)
    if args.model == "pmf":
        res = run_baseline(obs, None, None, cfg, heldout, mode="pmf")
    elif args.model == "grals":
        res = run_baseline(obs, gU, gV, cfg, heldout, mode="grals")
    else:
        res = run_graem(obs, gU, gV, cfg, heldout)
    os.makedirs(args.out, exist_ok=True)
    fio.write_factors(_factor_path(args.out, "factors_u", args.text),
                      res.U, text=args.text)
    fio.write_factors(_factor_path(args.out, "factors_v", args.text),
                      res.V, text=args.text)
    for side in ("u", "v"):
        if side in res.updated_graphs:
            fio.write_edge_list(res.updated_graphs[side],
                                os.path.join(args.out,
                                             f"graph_{side}_updated.txt"))
        if side in res.reports:
            path = os.path.join(args.out, f"report_{side}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                write_report_csv(res.reports[side], fh)
    summary = run_summary(res)
    summary["train_file"] = args.train
    if args.valid:
        summary["valid_file"] = args.valid
    fio.write_summary(os.path.join(args.out, "summary.txt"), summary)
    line = f"trained {args.model}; outputs in {args.out}"
    if res.final_rmse is not None:
        line += f" (heldout rmse {res.final_rmse:.6f})"
    print(line)
    return 0


def _cmd_prune(args):
    _require_files(args.config, args.train, args.factors_u, args.factors_v,
                   args.graph_u, args.graph_v)
    cfg = _config_from_args(GraemConfig, args, _GRAEM_FLAGS, args.config)
    if not args.graph_u and not args.graph_v:
        raise InputError("prune needs at least one of --graph-u/--graph-v")
    obs = fio.read_triplets(args.train, index_base=args.index_base)
    U = fio.read_factors(args.factors_u, text=args.text)
    V = fio.read_factors(args.factors_v, text=args.text)
    gU, gV = _load_graphs(args, obs.n_rows, obs.n_cols, cfg.gamma)
    rng = np.random.default_rng(cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    summary = {f"config.{k}": v for k, v in vars(cfg).items()}
    sides = (("u", gU, U, V, obs.row_view, cfg.reg_weight_graph_u,
              cfg.reg_weight_l2_u),
             ("v", gV, V, U, obs.col_view, cfg.reg_weight_graph_v,
              cfg.reg_weight_l2_v))
    for side, graph, mean, other, view, w_graph, w_l2 in sides:
        if graph is None:
            continue
        new_graph, report, _ = prune_side(
            graph, graph.adjacency, mean, other, view, cfg.alpha, w_graph,
            cfg.tau, cfg.k_samples, rng, w_l2=w_l2)
        fio.write_edge_list(new_graph,
                            os.path.join(args.out, f"graph_{side}_updated.txt"))
        with open(os.path.join(args.out, f"report_{side}.csv"), "w",
                  encoding="utf-8") as fh:
            write_report_csv(report, fh)
        summary[f"edges_kept_{side}"] = report.kept
        summary[f"edges_removed_{side}"] = report.removed_contested
        print(f"side {side}: kept {report.kept}, "
              f"removed {report.removed_contested} contested edges")
    fio.write_summary(os.path.join(args.out, "prune_summary.txt"), summary)
    return 0


def _cmd_eval(args):
    _require_files(args.factors_u, args.factors_v, args.data)
    U = fio.read_factors(args.factors_u, text=args.text)
    V = fio.read_factors(args.factors_v, text=args.text)
    obs = fio.read_triplets(args.data, index_base=args.index_base)
    if obs.n_rows > U.shape[0] or obs.n_cols > V.shape[0]:
        raise InputError("factor files are smaller than the evaluation data")
    # a data file without a dims header may infer fewer rows/cols than the
    # factors cover; unused trailing rows do not affect the metric
    rmse = predict_rmse(U[:obs.n_rows], V[:obs.n_cols], obs)
    print(f"rmse={rmse:.6f}")
    return 0


def _cmd_sweep(args):
    _require_files(args.config, args.train_config)
    base = _config_from_args(SynthConfig, args, _SYNTH_FLAGS, args.config)
    train_flags = tuple(f for f in _GRAEM_FLAGS
                        if f[1] not in ("d", "sigma2", "gamma", "seed"))
    train = _config_from_args(GraemConfig, args, train_flags,
                              args.train_config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse sweep values {args.values!r}") from None
    if not values:
        raise InputError("no sweep values given")
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    result = run_sweep(args.axis, values, base, args.repeats, train=train,
                       models=models)
    os.makedirs(args.out, exist_ok=True)
    rows_path = os.path.join(args.out, "sweep.csv")
    with open(rows_path, "w", encoding="utf-8") as fh:
        fh.write(result.to_csv())
    with open(os.path.join(args.out, "sweep_summary.csv"), "w",
              encoding="utf-8") as fh:
        fh.write(result.summary_csv())
    print(f"wrote {len(result.rows)} sweep rows to {rows_path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graphmf",
        description="Matrix completion with graph side-information and "
                    "contested-edge pruning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--text", action="store_true")
    _add_flags(p, _SYNTH_FLAGS)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model and save factors")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", default=None)
    p.add_argument("--graph-u", default=None)
    p.add_argument("--graph-v", default=None)
    p.add_argument("--model", required=True, choices=("pmf", "grals", "gpmf"))
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--index-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--text", action="store_true")
    p.add_argument("--readmit", dest="readmit_edges", action="store_const",
                   const=True, default=None)
    _add_flags(p, _GRAEM_FLAGS)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("prune", help="run the edge-pruning M-step only")
    p.add_argument("--train", required=True)
    p.add_argument("--factors-u", required=True)
    p.add_argument("--factors-v", required=True)
    p.add_argument("--graph-u", default=None)
    p.add_argument("--graph-v", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--index-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--text", action="store_true")
    _add_flags(p, _GRAEM_FLAGS)
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("eval", help="RMSE of saved factors on a triplet file")
    p.add_argument("--factors-u", required=True)
    p.add_argument("--factors-v", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--index-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--text", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="synthetic sweep over one axis")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--models", default=",".join(SWEEP_MODELS))
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None,
                   help="synthetic-data config file")
    p.add_argument("--train-config", default=None,
                   help="training config file")
    _add_flags(p, _SYNTH_FLAGS)
    _add_flags(p, _GRAEM_FLAGS,
               exclude=("d", "sigma2", "gamma", "seed"))
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GraphMFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
