"""PDE boundary-value solver based on penalized residual minimization."""

from .grid import Field, GridError, GridSpec, build_grid, mae, random_field
from .harness import ExperimentSpec, run_experiment, summarize, write_csv
from .loss import LossBreakdown, finite_difference_gradient, gradient, loss
from .operators import (
    BoundaryCondition,
    DiffFactor,
    DiffTerm,
    GridFunction,
    OperatorSpec,
    ProblemSpec,
    builtin_problem,
    builtin_problems,
    evaluate_boundary,
    evaluate_operator,
    heat_problem,
    wave_problem,
)
from .optimizer import OptimizationError, OptimizerConfig, SolveResult, minimize
from .reference import OracleError, heat_oracle, wave_exact, wave_exact_field
from .stencil import (
    GridTooSmallError,
    SchemePolicy,
    StencilKind,
    classify_points,
    derivative,
    first_derivative,
)
from .warmstart import CascadeError, cascade, interp_multilinear, interp_rbf

__all__ = [
    "BoundaryCondition",
    "CascadeError",
    "DiffFactor",
    "DiffTerm",
    "ExperimentSpec",
    "Field",
    "GridError",
    "GridFunction",
    "GridSpec",
    "GridTooSmallError",
    "LossBreakdown",
    "OperatorSpec",
    "OptimizationError",
    "OptimizerConfig",
    "OracleError",
    "ProblemSpec",
    "SchemePolicy",
    "SolveResult",
    "StencilKind",
    "build_grid",
    "builtin_problem",
    "builtin_problems",
    "cascade",
    "classify_points",
    "derivative",
    "evaluate_boundary",
    "evaluate_operator",
    "finite_difference_gradient",
    "first_derivative",
    "gradient",
    "heat_oracle",
    "heat_problem",
    "interp_multilinear",
    "interp_rbf",
    "loss",
    "mae",
    "minimize",
    "random_field",
    "run_experiment",
    "summarize",
    "wave_exact",
    "wave_exact_field",
    "wave_problem",
    "write_csv",
]
