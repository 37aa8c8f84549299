"""smoothot: smooth and sparse regularized optimal transport."""

from .bounds import bound_report, theorem1_bounds, theorem2_bounds, verify_sandwich
from .client import SmoothOT
from .colortransfer import (
    TransferResult,
    barycentric_project,
    build_cost,
    quantize,
    recolor,
    transfer_colors,
)
from .core import (
    c_transform,
    dual_value,
    marginal_residuals,
    primal_value,
    semi_dual_value,
    validate_instance,
)
from .errors import (
    DimensionMismatchError,
    EmptyRowError,
    ImageFetchError,
    InputFileError,
    InvalidConfigError,
    MaxItersExceededError,
    NegativeCostError,
    NonFiniteInputError,
    NonPositiveMassError,
    NotNormalizedError,
    SizeLimitExceededError,
    SmoothOTError,
    TooFewColorsError,
    UnsupportedRegularizerError,
    ZeroReferenceError,
)
from .oracle import plan_error, solve_exact, value_errors
from .problem import Problem
from .regularizers import delta_omega, max_omega, omega_value, project_simplex
from .solvers import (
    alternating_minimization,
    dual_objective_grad,
    recover_plan_from_dual,
    recover_plan_from_semidual,
    regularized_value,
    relaxed_primal_objective_grad,
    semi_dual_objective_grad,
    semi_relaxed_primal_objective_grad,
    smoothed_c_transform,
    solve,
    solve_dual,
    solve_relaxed_primal,
    solve_semi_relaxed_primal,
    solve_semidual,
)
from .types import (
    BoundReport,
    ConjugateValueGrad,
    CostMatrix,
    DualPotentials,
    ExactSolution,
    Histogram,
    Palette,
    RegParams,
    RelaxationParams,
    RGBImage,
    RunConfig,
    SolveOptions,
    SolveReport,
    TransportPlan,
    ValueErrors,
)

__all__ = [
    "SmoothOT",
    "Problem",
    "Histogram",
    "CostMatrix",
    "TransportPlan",
    "DualPotentials",
    "RegParams",
    "RelaxationParams",
    "ConjugateValueGrad",
    "SolveOptions",
    "SolveReport",
    "ExactSolution",
    "ValueErrors",
    "BoundReport",
    "Palette",
    "RGBImage",
    "RunConfig",
    "TransferResult",
    "validate_instance",
    "primal_value",
    "marginal_residuals",
    "c_transform",
    "dual_value",
    "semi_dual_value",
    "project_simplex",
    "delta_omega",
    "max_omega",
    "omega_value",
    "dual_objective_grad",
    "semi_dual_objective_grad",
    "relaxed_primal_objective_grad",
    "semi_relaxed_primal_objective_grad",
    "recover_plan_from_dual",
    "recover_plan_from_semidual",
    "smoothed_c_transform",
    "regularized_value",
    "solve_dual",
    "solve_semidual",
    "alternating_minimization",
    "solve_relaxed_primal",
    "solve_semi_relaxed_primal",
    "solve",
    "solve_exact",
    "plan_error",
    "value_errors",
    "theorem1_bounds",
    "theorem2_bounds",
    "verify_sandwich",
    "bound_report",
    "quantize",
    "build_cost",
    "barycentric_project",
    "recolor",
    "transfer_colors",
    "SmoothOTError",
    "DimensionMismatchError",
    "NonPositiveMassError",
    "NotNormalizedError",
    "NegativeCostError",
    "NonFiniteInputError",
    "UnsupportedRegularizerError",
    "InvalidConfigError",
    "MaxItersExceededError",
    "SizeLimitExceededError",
    "ZeroReferenceError",
    "TooFewColorsError",
    "EmptyRowError",
    "ImageFetchError",
    "InputFileError",
]
