"""Sparse signal recovery from one-bit (sign-only) linear measurements."""

from onebit.exceptions import (
    DegenerateSolutionError,
    InstanceFormatError,
    InvalidArgumentError,
    NumericalFailureError,
    SolverError,
)
from onebit.loss import (
    PenaltyMode,
    consistency,
    consistency_gradient,
    consistency_hessian,
    log_sigmoid,
    objective,
    sigmoid,
)
from onebit.metrics import (
    SupportScore,
    extract_support,
    score_support,
    unit_sphere_error,
)
from onebit.model import (
    ProblemInstance,
    SparseSignal,
    generate_instance,
    generate_sensing_matrix,
    generate_sparse_signal,
    load_instance,
    quantize,
    save_instance,
)
from onebit.solver import (
    SolveResult,
    SolverConfig,
    build_weights,
    minimize_surrogate,
    solve,
    surrogate_value,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateSolutionError",
    "InstanceFormatError",
    "InvalidArgumentError",
    "NumericalFailureError",
    "PenaltyMode",
    "ProblemInstance",
    "SolveResult",
    "SolverConfig",
    "SolverError",
    "SparseSignal",
    "SupportScore",
    "build_weights",
    "consistency",
    "consistency_gradient",
    "consistency_hessian",
    "extract_support",
    "generate_instance",
    "generate_sensing_matrix",
    "generate_sparse_signal",
    "load_instance",
    "log_sigmoid",
    "minimize_surrogate",
    "objective",
    "quantize",
    "save_instance",
    "score_support",
    "sigmoid",
    "solve",
    "surrogate_value",
    "unit_sphere_error",
]
