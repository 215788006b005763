import numpy as np
import pytest

import graphmf as g


SMALL = g.SynthConfig(n=30, m=24, d=3, block_size=6, frac_observed=0.3,
                      fidelity=0.6, seed=77)
TRAIN = g.GraemConfig(d=3, outer_sweeps=4, k_samples=8, cg_max_iters=40,
                      seed=3)


@pytest.fixture(scope="module")
def small_data():
    return g.make_synth_dataset(SMALL)


def test_config_validation():
    for bad in (dict(d=0), dict(sigma2=0.0), dict(gamma=-1.0),
                dict(em_max_rounds=0), dict(k_samples=-1), dict(em_tol=-0.1),
                dict(pmf_ridge=-2.0), dict(cg_rel_tol=2.0)):
        with pytest.raises(g.ConfigError):
            g.GraemConfig(**bad)


def test_alpha_is_inverse_noise():
    assert g.GraemConfig(sigma2=0.25).alpha == 4.0


def test_solver_settings_phases():
    cfg = g.GraemConfig(pmf_ridge=7.0, reg_weight_graph_u=2.0,
                        reg_weight_l2_v=0.5)
    pmf = cfg.solver_settings("pmf")
    assert pmf.reg_weight_graph_u == pmf.reg_weight_graph_v == 0.0
    assert pmf.reg_weight_l2_u == pmf.reg_weight_l2_v == 7.0
    both = cfg.solver_settings("graph")
    assert both.reg_weight_graph_u == 2.0
    assert both.reg_weight_l2_v == 0.5
    # a side without a graph keeps the ridge so its solve stays well-posed
    only_u = cfg.solver_settings("graph", gU_present=True, gV_present=False)
    assert only_u.reg_weight_l2_v == 0.5 + 7.0
    with pytest.raises(g.ConfigError):
        cfg.solver_settings("warmup")


def test_graphless_run_degenerates_to_pmf(small_data):
    data = small_data
    a = g.run_graem(data.obs_train, None, None, TRAIN, data.obs_valid)
    b = g.run_baseline(data.obs_train, None, None, TRAIN, data.obs_valid,
                       mode="pmf")
    np.testing.assert_array_equal(a.U, b.U)
    np.testing.assert_array_equal(a.V, b.V)
    assert a.updated_graphs == {} and a.reports == {}
    assert a.mode == "gpmf" and b.mode == "pmf"


def test_trace_and_timing(small_data):
    data = small_data
    res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                      TRAIN, data.obs_valid)
    assert len(res.rmse_trace) == 2  # init + one EM round
    assert set(res.updated_graphs) == {"u", "v"}
    phases = {k: v for k, v in res.timing.items() if k != "total"}
    assert {"pmf_init", "m_step", "e_step", "evaluate"} <= set(phases)
    assert sum(phases.values()) <= res.timing["total"]
    assert sum(phases.values()) >= 0.95 * res.timing["total"]
    assert res.final_rmse == res.rmse_trace[-1]


def test_no_heldout_no_trace(small_data):
    data = small_data
    res = g.run_graem(data.obs_train, data.gU_corrupted, None, TRAIN)
    assert res.rmse_trace == [] and res.final_rmse is None
    assert set(res.updated_graphs) == {"u"}


def test_multi_round_trace_length(small_data):
    data = small_data
    cfg = g.GraemConfig(**{**TRAIN.__dict__, "em_max_rounds": 2})
    res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                      cfg, data.obs_valid)
    assert len(res.rmse_trace) == 3


def test_em_tol_requires_heldout(small_data):
    cfg = g.GraemConfig(**{**TRAIN.__dict__, "em_tol": 0.1})
    with pytest.raises(g.ConfigError):
        g.run_graem(small_data.obs_train, small_data.gU_corrupted, None, cfg)


def test_em_tol_early_stop(small_data):
    data = small_data
    cfg = g.GraemConfig(**{**TRAIN.__dict__, "em_max_rounds": 4,
                           "em_tol": 1e9})
    res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                      cfg, data.obs_valid)
    assert len(res.rmse_trace) == 2  # stopped after the first round


def test_round_constraint_monotone_without_readmit(small_data):
    data = small_data
    one = g.GraemConfig(**{**TRAIN.__dict__, "em_max_rounds": 1})
    two = g.GraemConfig(**{**TRAIN.__dict__, "em_max_rounds": 2})
    r1 = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                     one, data.obs_valid)
    r2 = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                     two, data.obs_valid)
    for side, orig in (("u", data.gU_corrupted), ("v", data.gV_corrupted)):
        after_one = r1.updated_graphs[side].adjacency.to_dense()
        after_two = r2.updated_graphs[side].adjacency.to_dense()
        assert np.all(after_one - after_two >= 0)  # round 2 never re-adds
        assert np.all(orig.adjacency.to_dense() - after_one >= 0)


def test_readmit_constraint_is_original(small_data):
    data = small_data
    cfg = g.GraemConfig(**{**TRAIN.__dict__, "em_max_rounds": 2,
                           "readmit_edges": True})
    res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                      cfg, data.obs_valid)
    for side, orig in (("u", data.gU_corrupted), ("v", data.gV_corrupted)):
        kept = res.updated_graphs[side].adjacency.to_dense()
        assert np.all(orig.adjacency.to_dense() - kept >= 0)
        # second-round report re-scored the full original support
        assert len(res.reports[side].edges) == orig.n_edges


def test_baseline_modes(small_data):
    data = small_data
    with pytest.raises(g.ConfigError):
        g.run_baseline(data.obs_train, None, None, TRAIN, mode="svd")
    with pytest.raises(g.InputError):
        g.run_baseline(data.obs_train, None, None, TRAIN, mode="grals")
    res = g.run_baseline(data.obs_train, data.gU_corrupted, None, TRAIN,
                         data.obs_valid, mode="grals")
    assert res.mode == "grals"
    assert len(res.rmse_trace) == 2
    assert res.updated_graphs == {}


def test_input_shape_checks(small_data):
    data = small_data
    wrong = g.graph_from_edges([(0, 1)], 5, 1.0)
    with pytest.raises(g.InputError):
        g.run_graem(data.obs_train, wrong, None, TRAIN)
    held = g.observation_set([0], [0], [1.0], (3, 3))
    with pytest.raises(g.InputError):
        g.run_graem(data.obs_train, None, None, TRAIN, held)


def test_run_summary_fields(small_data):
    data = small_data
    res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                      TRAIN, data.obs_valid)
    s = g.run_summary(res)
    assert s["mode"] == "gpmf"
    assert s["config.d"] == 3 and s["config.seed"] == 3
    assert "seconds.total" in s and "seconds.m_step" in s
    assert s["edges_kept_u"] + s["edges_removed_u"] == data.gU_corrupted.n_edges
    assert s["rmse"] == res.final_rmse


# -- default-scale behavior, shared sweep fixture --

def test_gpmf_beats_grals_at_f07(fidelity_summary):
    assert (fidelity_summary[(0.7, "gpmf")]["rmse_mean"]
            < fidelity_summary[(0.7, "grals")]["rmse_mean"])


def test_clean_graph_pruning_is_conservative(fidelity_summary):
    """At fidelity 1 the prune should drop few edges and stay within
    noise of training on the intact true graph."""
    row = fidelity_summary[(1.0, "gpmf")]
    ref = fidelity_summary[(1.0, "grals-true-graph")]
    assert row["te_removed_mean"] <= 0.25
    pooled = np.sqrt((row["rmse_std"] ** 2 + ref["rmse_std"] ** 2) / 2)
    assert abs(row["rmse_mean"] - ref["rmse_mean"]) <= pooled


def test_fully_corrupted_graph_hurts(fidelity_summary):
    assert (fidelity_summary[(0.0, "grals")]["rmse_mean"]
            > fidelity_summary[(0.0, "pmf")]["rmse_mean"])
