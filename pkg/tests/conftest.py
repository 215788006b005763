import time

import numpy as np
import pytest

import graphmf as g

# Expensive end-to-end artifacts shared between the module tests and the
# acceptance gate.  Session scope so the sweep runs once per pytest
# invocation no matter which subset of files is collected.

FIDELITY_VALUES = [0.0, 0.3, 0.5, 0.7, 1.0]
FIDELITY_SEED = 11
FIDELITY_REPEATS = 5


def run_fidelity_sweep():
    base = g.SynthConfig(seed=FIDELITY_SEED)
    return g.run_sweep("fidelity", FIDELITY_VALUES, base,
                       repeats=FIDELITY_REPEATS)


@pytest.fixture(scope="session")
def fidelity_sweep():
    """Default-scale fidelity sweep, 5 repeats, all four models."""
    start = time.perf_counter()
    result = run_fidelity_sweep()
    result.elapsed_seconds = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def fidelity_summary(fidelity_sweep):
    """(axis_value, model) -> summary row dict."""
    return {(r["axis_value"], r["model"]): r
            for r in fidelity_sweep.summary_rows()}


@pytest.fixture(scope="session")
def edge_class_runs():
    """Five full EM runs at 20% observed for edge-classification stats.

    Returns a list of (GraemResult, SynthDataset) pairs.
    """
    out = []
    for k in range(5):
        base = g.SynthConfig(seed=100 + k, frac_observed=0.2)
        data = g.make_synth_dataset(base)
        cfg = g.GraemConfig(seed=200 + k)
        res = g.run_graem(data.obs_train, data.gU_corrupted, data.gV_corrupted,
                          cfg, data.obs_valid)
        out.append((res, data))
    return out


def pooled_edge_fractions(runs):
    tot = dict(removed_ce=0, total_ce=0, removed_te=0, total_te=0)
    for res, data in runs:
        for side, cor, tru in (("u", data.gU_corrupted, data.gU_true),
                               ("v", data.gV_corrupted, data.gV_true)):
            c = g.classify_edge_counts(res.updated_graphs[side].adjacency,
                                       cor.adjacency, tru.adjacency)
            for key in tot:
                tot[key] += c[key]
    return (tot["removed_ce"] / tot["total_ce"],
            tot["removed_te"] / tot["total_te"])


# The acceptance tests record one verdict line per criterion; echo them in
# a summary section so they are visible without -s.

_CRITERION_LINES = []


def record_criterion(name, ok, detail=""):
    verdict = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    line = f"{name}: {verdict}"
    if detail:
        line += f" ({detail})"
    _CRITERION_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
