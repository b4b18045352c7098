"""Sparse residual minimization for stationary distributions of doubly sparse chains."""

from .fw import FwConfig, FwState, fw_extract, fw_init, fw_iteration_bound, fw_solve, fw_step
from .gk import GkConfig, GkState, gk_init, gk_iterations, gk_solve, gk_step
from .nl1 import Nl1Config, Nl1State, adaptive_step_denominator, nl1_init, nl1_solve, nl1_step
from .problems import (
    DIAGONAL,
    RANDOM_DS,
    WEBGRAPH,
    EdgeList,
    ProblemSpec,
    build_problem,
    gen_diagonal,
    gen_random_ds,
    load_snap_edgelist,
    webgraph_to_P,
)
from .report import BenchRow, SolveReport, write_bench_csv, write_trace_csv
from .sparse import (
    CsrMatrix,
    DualSparseMatrix,
    SparsityStats,
    build_dual,
    load_dsm,
    pagerank_operator,
    residual_inf,
    residual_two,
    save_dsm,
    sparsity_stats,
    spmv,
    spmv_t,
)
from .trees import (
    MAX,
    MIN,
    ArgExtremeTree,
    TreeUpdateMetrics,
    WeightTree,
    tree_build,
    tree_top,
    tree_update,
    wt_build,
    wt_sample,
    wt_scale_all,
    wt_update,
)
from .verify import IncrementalDriftError

__version__ = "0.1.0"

__all__ = [
    "ArgExtremeTree",
    "BenchRow",
    "CsrMatrix",
    "DIAGONAL",
    "DualSparseMatrix",
    "EdgeList",
    "FwConfig",
    "FwState",
    "GkConfig",
    "GkState",
    "IncrementalDriftError",
    "MAX",
    "MIN",
    "Nl1Config",
    "Nl1State",
    "ProblemSpec",
    "RANDOM_DS",
    "SolveReport",
    "SparsityStats",
    "TreeUpdateMetrics",
    "WEBGRAPH",
    "WeightTree",
    "build_dual",
    "build_problem",
    "fw_extract",
    "fw_init",
    "fw_iteration_bound",
    "fw_solve",
    "fw_step",
    "gen_diagonal",
    "gen_random_ds",
    "gk_init",
    "gk_iterations",
    "gk_solve",
    "gk_step",
    "load_dsm",
    "load_snap_edgelist",
    "adaptive_step_denominator",
    "nl1_init",
    "nl1_solve",
    "nl1_step",
    "pagerank_operator",
    "residual_inf",
    "residual_two",
    "save_dsm",
    "sparsity_stats",
    "spmv",
    "spmv_t",
    "tree_build",
    "tree_top",
    "tree_update",
    "webgraph_to_P",
    "write_bench_csv",
    "write_trace_csv",
    "wt_build",
    "wt_sample",
    "wt_scale_all",
    "wt_update",
]
