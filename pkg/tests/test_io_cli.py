"""File-format round trips and end-to-end command-line runs."""

import numpy as np
import pytest

from graphmf import cli
from graphmf import io as fio
from graphmf.datagen import SweepResult
from graphmf.driver import GraemConfig
from graphmf.errors import ConfigError, DataFormatError
from graphmf.sparse import observation_set

from util import random_graph, random_observations


# ---------------------------------------------------------------- triplets


def test_triplets_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    obs = random_observations(9, 7, 30, rng)
    path = tmp_path / "t.txt"
    fio.write_triplets(obs, path)
    back = fio.read_triplets(path)
    assert (back.n_rows, back.n_cols) == (9, 7)
    assert np.array_equal(back.rows, obs.rows)
    assert np.array_equal(back.cols, obs.cols)
    assert np.array_equal(back.values, obs.values)


def test_triplets_dims_header_preserves_empty_margin(tmp_path):
    # last row/col unobserved; the header keeps the full shape
    obs = observation_set(np.array([0]), np.array([1]),
                          np.array([2.5]), (4, 6))
    path = tmp_path / "t.txt"
    fio.write_triplets(obs, path)
    back = fio.read_triplets(path)
    assert (back.n_rows, back.n_cols) == (4, 6)


def test_triplets_dims_inferred_without_header(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("0 0 1.0\n2 4 -3.5\n")
    back = fio.read_triplets(path)
    assert (back.n_rows, back.n_cols) == (3, 5)
    assert back.nnz == 2


def test_triplets_one_based_and_commas(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("1,1,4.0\n3,2,5.0\n")
    back = fio.read_triplets(path, index_base=1)
    assert (back.n_rows, back.n_cols) == (3, 2)
    assert np.array_equal(back.rows, [0, 2])
    assert np.array_equal(back.cols, [0, 1])


def test_triplets_blank_lines_and_comments_skipped(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# a comment\n\n0 0 1.0\n\n# another\n1 1 2.0\n")
    assert fio.read_triplets(path).nnz == 2


@pytest.mark.parametrize("body, lineno, fragment", [
    ("0 0 1.0\n0 1\n", 2, "expected 'row col value'"),
    ("0 0 1.0\n1 x 2.0\n", 2, "expected 'row col value'"),
    ("0 0 1.0\n\n0 0 2.0\n", 3, "duplicate entry (0, 0)"),
    ("# dims 3\n0 0 1.0\n", 1, "malformed dims header"),
    ("# dims a b\n0 0 1.0\n", 1, "malformed dims header"),
])
def test_triplets_errors_name_the_line(tmp_path, body, lineno, fragment):
    path = tmp_path / "bad.txt"
    path.write_text(body)
    with pytest.raises(DataFormatError) as exc:
        fio.read_triplets(path)
    msg = str(exc.value)
    assert f"{path}:{lineno}:" in msg
    assert fragment in msg


def test_triplets_index_below_base(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 1 2.0\n")
    with pytest.raises(DataFormatError, match="below the declared base"):
        fio.read_triplets(path, index_base=1)


def test_triplets_entry_beyond_declared_dims(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# dims 2 2\n0 3 1.0\n")
    with pytest.raises(DataFormatError, match="exceeds the declared dims"):
        fio.read_triplets(path)


# -------------------------------------------------------------- edge lists


def test_edge_list_round_trip_byte_exact(tmp_path):
    rng = np.random.default_rng(3)
    graph = random_graph(12, 20, rng, gamma=0.7)
    first = tmp_path / "g1.txt"
    second = tmp_path / "g2.txt"
    fio.write_edge_list(graph, first)
    back = fio.read_edge_list(first, gamma=0.7)
    assert back.n_nodes == 12
    assert back.n_edges == graph.n_edges
    fio.write_edge_list(back, second)
    assert first.read_bytes() == second.read_bytes()


def test_edge_list_rejects_weighted_lines(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 2 0.5\n")
    with pytest.raises(DataFormatError, match="weighted edges are not"):
        fio.read_edge_list(path)


def test_edge_list_empty_needs_node_count(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("")
    with pytest.raises(DataFormatError, match="empty edge list"):
        fio.read_edge_list(path)
    path.write_text("# nodes 4\n")
    graph = fio.read_edge_list(path)
    assert graph.n_nodes == 4
    assert graph.n_edges == 0


def test_edge_list_explicit_node_count_wins(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# nodes 5\n0 1\n")
    assert fio.read_edge_list(path).n_nodes == 5
    assert fio.read_edge_list(path, n_nodes=9).n_nodes == 9


def test_edge_list_non_integer_index(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 first\n")
    with pytest.raises(DataFormatError, match="integer node indices"):
        fio.read_edge_list(path)


# ----------------------------------------------------------------- factors


def test_factors_binary_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((7, 3))
    path = tmp_path / "f.bin"
    fio.write_factors(path, X)
    assert np.array_equal(fio.read_factors(path), X)


def test_factors_text_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    X = rng.standard_normal((5, 4))
    path = tmp_path / "f.txt"
    fio.write_factors(path, X, text=True)
    assert np.array_equal(fio.read_factors(path, text=True), X)


def test_factors_rejects_non_2d():
    with pytest.raises(DataFormatError, match="must be 2-d"):
        fio.write_factors("/dev/null", np.zeros(4))


def test_factors_binary_corruption_errors(tmp_path):
    X = np.arange(6.0).reshape(3, 2)
    path = tmp_path / "f.bin"
    fio.write_factors(path, X)
    blob = path.read_bytes()

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(DataFormatError, match="bad magic"):
        fio.read_factors(bad)

    bad.write_bytes(blob[:4] + b">" + blob[5:])
    with pytest.raises(DataFormatError, match="byte order"):
        fio.read_factors(bad)

    bad.write_bytes(blob[:12])
    with pytest.raises(DataFormatError, match="truncated factor header"):
        fio.read_factors(bad)

    bad.write_bytes(blob + b"\x00" * 8)
    with pytest.raises(DataFormatError, match="expected .* bytes"):
        fio.read_factors(bad)


def test_factors_text_errors(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("1.0 2.0\n")
    with pytest.raises(DataFormatError, match="missing factor header"):
        fio.read_factors(path, text=True)
    path.write_text("# factors 2 3\n1.0 2.0 3.0\n4.0 5.0\n")
    with pytest.raises(DataFormatError, match="row 1 has 2 values"):
        fio.read_factors(path, text=True)


# ------------------------------------------------------------------ config


def test_read_config_parses_flat_pairs(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\n\nd = 5\n  tau=-0.25  \nname = two words\n")
    assert fio.read_config(path) == {
        "d": "5", "tau": "-0.25", "name": "two words"}


@pytest.mark.parametrize("body", ["just a line\n", "key =\n", "= value\n"])
def test_read_config_malformed(tmp_path, body):
    path = tmp_path / "c.cfg"
    path.write_text(body)
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        fio.read_config(path)


def test_build_config_layering():
    cfg = fio.build_config(
        GraemConfig,
        file_values={"d": "8", "tau": "0.5", "readmit_edges": "yes"},
        overrides={"tau": 0.75, "seed": 9, "k_samples": None})
    assert cfg.d == 8
    assert cfg.tau == 0.75          # override beats file
    assert cfg.readmit_edges is True
    assert cfg.seed == 9
    assert cfg.k_samples == GraemConfig().k_samples


def test_build_config_errors():
    with pytest.raises(ConfigError, match="unknown config key 'bogus'"):
        fio.build_config(GraemConfig, file_values={"bogus": "1"})
    with pytest.raises(ConfigError, match="unknown override 'bogus'"):
        fio.build_config(GraemConfig, overrides={"bogus": 1})
    with pytest.raises(ConfigError, match="cannot parse 'abc' as int"):
        fio.build_config(GraemConfig, file_values={"d": "abc"})
    with pytest.raises(ConfigError, match="expected a boolean"):
        fio.build_config(GraemConfig, file_values={"readmit_edges": "maybe"})


def test_write_summary_round_trips_through_read_config(tmp_path):
    path = tmp_path / "s.txt"
    fio.write_summary(path, {"rmse": 0.123456789012, "mode": "pmf", "n": 7})
    back = fio.read_config(path)
    assert float(back["rmse"]) == 0.123456789012
    assert back["mode"] == "pmf"
    assert int(back["n"]) == 7


# --------------------------------------------------------------------- CLI


SYNTH_ARGS = ["--n", "24", "--m", "18", "--d", "2", "--block-size", "6",
              "--frac-observed", "0.35", "--fidelity", "0.6", "--seed", "5"]

FAST_TRAIN = ["--d", "2", "--sweeps", "3", "--k-samples", "6",
              "--cg-iters", "40", "--pmf-ridge", "1.0",
              "--reg-graph-u", "1.0", "--reg-graph-v", "1.0", "--seed", "1"]

SYNTH_FILES = ("train.txt", "valid.txt", "graph_u.txt", "graph_v.txt",
               "graph_u_true.txt", "graph_v_true.txt",
               "corrupted_edges_u.txt", "corrupted_edges_v.txt",
               "factors_u_true.bin", "factors_v_true.bin",
               "synth_config.txt")


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    assert cli.main(["synth", "--out", str(out)] + SYNTH_ARGS) == 0
    return out


@pytest.fixture(scope="module")
def pmf_run(tmp_path_factory, bundle):
    out = tmp_path_factory.mktemp("pmf")
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--valid", str(bundle / "valid.txt"),
                   "--model", "pmf", "--out", str(out)] + FAST_TRAIN)
    assert rc == 0
    return out


def test_synth_writes_full_bundle(bundle):
    for name in SYNTH_FILES:
        assert (bundle / name).is_file(), name
    echo = fio.read_config(bundle / "synth_config.txt")
    assert echo["config.n"] == "24"
    assert echo["config.fidelity"] == "0.6"
    train = fio.read_triplets(bundle / "train.txt")
    valid = fio.read_triplets(bundle / "valid.txt")
    assert (train.n_rows, train.n_cols) == (24, 18)
    assert (valid.n_rows, valid.n_cols) == (24, 18)
    assert train.nnz == int(echo["train_entries"])
    assert valid.nnz == int(echo["valid_entries"])


def test_synth_prints_entry_counts(tmp_path, capsys):
    out = tmp_path / "b"
    assert cli.main(["synth", "--out", str(out)] + SYNTH_ARGS) == 0
    line = capsys.readouterr().out
    assert "wrote synthetic bundle" in line
    assert "train" in line and "valid" in line


def test_synth_is_deterministic(bundle, tmp_path):
    out = tmp_path / "again"
    assert cli.main(["synth", "--out", str(out)] + SYNTH_ARGS) == 0
    for name in SYNTH_FILES:
        assert (out / name).read_bytes() == (bundle / name).read_bytes(), name


def test_train_pmf_outputs(pmf_run, bundle):
    U = fio.read_factors(pmf_run / "factors_u.bin")
    V = fio.read_factors(pmf_run / "factors_v.bin")
    assert U.shape == (24, 2) and V.shape == (18, 2)
    summary = fio.read_config(pmf_run / "summary.txt")
    assert summary["mode"] == "pmf"
    assert summary["train_file"] == str(bundle / "train.txt")
    assert float(summary["rmse"]) > 0
    # a pmf run prunes nothing
    assert not (pmf_run / "graph_u_updated.txt").exists()
    assert not (pmf_run / "report_u.csv").exists()


def test_train_reports_heldout_rmse(bundle, tmp_path, capsys):
    out = tmp_path / "run"
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--valid", str(bundle / "valid.txt"),
                   "--model", "pmf", "--out", str(out)] + FAST_TRAIN)
    assert rc == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("trained pmf; outputs in")
    assert "heldout rmse" in line
    summary = fio.read_config(out / "summary.txt")
    assert f"{float(summary['rmse']):.6f}" in line


def test_train_gpmf_writes_pruned_graphs(bundle, tmp_path, capsys):
    out = tmp_path / "run"
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--graph-u", str(bundle / "graph_u.txt"),
                   "--graph-v", str(bundle / "graph_v.txt"),
                   "--model", "gpmf", "--out", str(out)] + FAST_TRAIN)
    assert rc == 0
    assert "trained gpmf" in capsys.readouterr().out
    for side, source in (("u", "graph_u.txt"), ("v", "graph_v.txt")):
        original = fio.read_edge_list(bundle / source)
        updated = fio.read_edge_list(out / f"graph_{side}_updated.txt")
        report = (out / f"report_{side}.csv").read_text().splitlines()
        assert report[0] == "i,j,scm_value,decision"
        decisions = [line.split(",")[3] for line in report[1:]]
        assert set(decisions) <= {"kept", "contested"}
        assert len(decisions) == original.n_edges
        assert decisions.count("kept") == updated.n_edges
        summary = fio.read_config(out / "summary.txt")
        assert int(summary[f"edges_kept_{side}"]) == updated.n_edges


def test_train_text_factor_output(bundle, tmp_path):
    out = tmp_path / "run"
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--model", "pmf", "--out", str(out), "--text"]
                  + FAST_TRAIN)
    assert rc == 0
    assert fio.read_factors(out / "factors_u.txt", text=True).shape == (24, 2)
    assert not (out / "factors_u.bin").exists()


def test_train_config_file_and_flag_precedence(bundle, tmp_path):
    cfg = tmp_path / "train.cfg"
    cfg.write_text("outer_sweeps = 2\nk_samples = 4\nd = 2\n"
                   "pmf_ridge = 1.0\nseed = 1\n")
    out = tmp_path / "run"
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--model", "pmf", "--out", str(out),
                   "--config", str(cfg), "--sweeps", "5"])
    assert rc == 0
    summary = fio.read_config(out / "summary.txt")
    assert summary["config.outer_sweeps"] == "5"   # flag beats file
    assert summary["config.k_samples"] == "4"      # file beats default


def test_train_grals_without_graph_fails(bundle, tmp_path, capsys):
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--model", "grals", "--out", str(tmp_path / "x")]
                  + FAST_TRAIN)
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "graph" in err


def test_eval_matches_training_summary(pmf_run, bundle, capsys):
    rc = cli.main(["eval", "--factors-u", str(pmf_run / "factors_u.bin"),
                   "--factors-v", str(pmf_run / "factors_v.bin"),
                   "--data", str(bundle / "valid.txt")])
    assert rc == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("rmse=")
    reported = float(fio.read_config(pmf_run / "summary.txt")["rmse"])
    assert abs(float(line[5:]) - reported) < 5e-7


def test_eval_exact_factors_zero_rmse(tmp_path, capsys):
    rng = np.random.default_rng(8)
    U = rng.standard_normal((6, 3))
    V = rng.standard_normal((5, 3))
    i = np.array([0, 2, 5, 3])
    j = np.array([1, 4, 0, 3])
    obs = observation_set(i, j, (U @ V.T)[i, j], (6, 5))
    fio.write_triplets(obs, tmp_path / "data.txt")
    fio.write_factors(tmp_path / "u.bin", U)
    fio.write_factors(tmp_path / "v.bin", V)
    rc = cli.main(["eval", "--factors-u", str(tmp_path / "u.bin"),
                   "--factors-v", str(tmp_path / "v.bin"),
                   "--data", str(tmp_path / "data.txt")])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "rmse=0.000000"


def test_eval_one_based_data(tmp_path, capsys):
    U = np.array([[1.0], [2.0]])
    V = np.array([[3.0], [4.0]])
    (tmp_path / "data.txt").write_text("1 1 3.0\n2 2 8.0\n")
    fio.write_factors(tmp_path / "u.bin", U)
    fio.write_factors(tmp_path / "v.bin", V)
    rc = cli.main(["eval", "--factors-u", str(tmp_path / "u.bin"),
                   "--factors-v", str(tmp_path / "v.bin"),
                   "--data", str(tmp_path / "data.txt"),
                   "--index-base", "1"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "rmse=0.000000"


def test_eval_undersized_factors(pmf_run, tmp_path, capsys):
    (tmp_path / "data.txt").write_text("40 2 1.0\n")
    rc = cli.main(["eval", "--factors-u", str(pmf_run / "factors_u.bin"),
                   "--factors-v", str(pmf_run / "factors_v.bin"),
                   "--data", str(tmp_path / "data.txt")])
    assert rc == 1
    assert "smaller than the evaluation data" in capsys.readouterr().err


def test_prune_standalone(bundle, tmp_path, capsys):
    out = tmp_path / "pruned"
    rc = cli.main(["prune", "--train", str(bundle / "train.txt"),
                   "--factors-u", str(bundle / "factors_u_true.bin"),
                   "--factors-v", str(bundle / "factors_v_true.bin"),
                   "--graph-u", str(bundle / "graph_u.txt"),
                   "--out", str(out),
                   "--k-samples", "6", "--reg-graph-u", "1.0", "--seed", "2"])
    assert rc == 0
    line = capsys.readouterr().out
    assert "side u: kept" in line and "contested edges" in line
    original = fio.read_edge_list(bundle / "graph_u.txt")
    updated = fio.read_edge_list(out / "graph_u_updated.txt")
    summary = fio.read_config(out / "prune_summary.txt")
    kept = int(summary["edges_kept_u"])
    removed = int(summary["edges_removed_u"])
    assert kept == updated.n_edges
    assert kept + removed == original.n_edges
    # only the requested side is pruned
    assert not (out / "graph_v_updated.txt").exists()
    assert "edges_kept_v" not in summary


def test_prune_requires_a_graph(bundle, tmp_path, capsys):
    rc = cli.main(["prune", "--train", str(bundle / "train.txt"),
                   "--factors-u", str(bundle / "factors_u_true.bin"),
                   "--factors-v", str(bundle / "factors_v_true.bin"),
                   "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "prune needs at least one of" in capsys.readouterr().err


def test_sweep_cli_writes_csvs(tmp_path, capsys):
    out = tmp_path / "sweep"
    rc = cli.main(["sweep", "--axis", "fidelity", "--values", "0,1",
                   "--repeats", "1", "--models", "pmf,grals",
                   "--out", str(out),
                   "--n", "20", "--m", "16", "--d", "2", "--block-size", "4",
                   "--frac-observed", "0.4", "--seed", "3",
                   "--sweeps", "2", "--cg-iters", "30",
                   "--pmf-ridge", "1.0",
                   "--reg-graph-u", "1.0", "--reg-graph-v", "1.0"])
    assert rc == 0
    assert "wrote 4 sweep rows" in capsys.readouterr().out
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == ",".join(SweepResult.COLUMNS)
    assert len(rows) == 1 + 4
    summary = (out / "sweep_summary.csv").read_text().splitlines()
    assert len(summary) == 1 + 4     # 2 values x 2 models, repeats pooled


def test_sweep_cli_bad_values(tmp_path, capsys):
    rc = cli.main(["sweep", "--axis", "fidelity", "--values", "0,high",
                   "--repeats", "1", "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "cannot parse sweep values" in capsys.readouterr().err


def test_missing_input_file_is_a_clean_error(tmp_path, capsys):
    rc = cli.main(["train", "--train", str(tmp_path / "nope.txt"),
                   "--model", "pmf", "--out", str(tmp_path / "x")])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "input file not found" in err


def test_bad_config_key_is_a_clean_error(bundle, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    rc = cli.main(["train", "--train", str(bundle / "train.txt"),
                   "--model", "pmf", "--out", str(tmp_path / "x"),
                   "--config", str(cfg)])
    assert rc == 1
    assert "unknown config key" in capsys.readouterr().err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--model", "pmf"])      # missing --train/--out
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--train", "t", "--out", "o", "--model", "svd"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
