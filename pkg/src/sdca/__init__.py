"""Stochastic dual coordinate ascent for regularized linear prediction."""

from .data import (
    Dataset,
    Example,
    SparseVector,
    dataset_from_arrays,
    dot,
    dumps_svmlight,
    load_svmlight,
    normalize_to_unit_ball,
    parse_svmlight,
)
from .estimators import SDCAClassifier, SDCARegressor
from .losses import CoordinateProblem, Loss, make_loss
from .solver import (
    SolverConfig,
    SolverResult,
    SolverState,
    TraceRecord,
    dual_objective,
    duality_gap,
    modified_sgd_epoch,
    primal_objective,
    run_cyclic,
    run_sdca,
    run_sdca_perm,
    run_sdca_sgd_init,
    run_sgd_baseline,
    solve,
    w_of_alpha,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Example",
    "SparseVector",
    "dataset_from_arrays",
    "dot",
    "dumps_svmlight",
    "load_svmlight",
    "normalize_to_unit_ball",
    "parse_svmlight",
    "SDCAClassifier",
    "SDCARegressor",
    "CoordinateProblem",
    "Loss",
    "make_loss",
    "SolverConfig",
    "SolverResult",
    "SolverState",
    "TraceRecord",
    "dual_objective",
    "duality_gap",
    "modified_sgd_epoch",
    "primal_objective",
    "run_cyclic",
    "run_sdca",
    "run_sdca_perm",
    "run_sdca_sgd_init",
    "run_sgd_baseline",
    "solve",
    "w_of_alpha",
    "__version__",
]
