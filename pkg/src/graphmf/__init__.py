"""Matrix completion with graph side-information and contested-edge pruning.

The package trains low-rank factor models on sparsely observed matrices
where rows and columns come with similarity graphs that may contain wrong
edges.  Training alternates graph-regularized least squares with an edge
audit that estimates the latent-feature covariance on the graph support
and removes edges the data contradict.
"""

from ._kernels import BACKEND as kernel_backend
from .chol import CholeskyFactor, cholesky, min_degree_order
from .datagen import (SWEEP_AXES, SWEEP_MODELS, SweepResult, SynthConfig,
                      SynthDataset, corrupt_graph, make_block_graph,
                      make_synth_dataset, run_sweep, sample_factors,
                      sample_observations)
from .driver import GraemConfig, GraemResult, run_baseline, run_graem, run_summary
from .edge_prune import (ColumnPosteriorPrecision, ConstrainedSCM,
                         EdgeUpdateReport, classify_edge_counts,
                         classify_edges, column_precision, constrained_scm,
                         prune_side, sample_column, sparse_cholesky,
                         threshold_edges, write_report_csv)
from .errors import (ConfigError, DataFormatError, GraphMFError, InputError,
                     NumericalError)
from .solvers import (SolverSettings, als_train, init_factors, objective,
                      objective_grad, predict_rmse, solve_subproblem)
from .sparse import (GraphSI, ObservationSet, SparseMatrix, build_adjacency,
                     build_regularized_laplacian, graph_from_adjacency,
                     graph_from_edges, observation_set, spmv)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend", "__version__",
    "SparseMatrix", "GraphSI", "ObservationSet", "spmv",
    "build_adjacency", "build_regularized_laplacian",
    "graph_from_adjacency", "graph_from_edges", "observation_set",
    "CholeskyFactor", "cholesky", "min_degree_order",
    "SolverSettings", "objective", "objective_grad", "solve_subproblem",
    "als_train", "init_factors", "predict_rmse",
    "ColumnPosteriorPrecision", "ConstrainedSCM", "EdgeUpdateReport",
    "column_precision", "sparse_cholesky", "sample_column",
    "constrained_scm", "threshold_edges", "classify_edges",
    "classify_edge_counts", "prune_side", "write_report_csv",
    "GraemConfig", "GraemResult", "run_graem", "run_baseline", "run_summary",
    "SynthConfig", "SynthDataset", "SweepResult", "SWEEP_AXES",
    "SWEEP_MODELS", "make_block_graph", "corrupt_graph", "sample_factors",
    "sample_observations", "make_synth_dataset", "run_sweep",
    "GraphMFError", "InputError", "DataFormatError", "NumericalError",
    "ConfigError",
]
