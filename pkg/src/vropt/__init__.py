"""Variance-reduced stochastic gradient toolkit for finite-sum linear models."""

from .data import (
    Dataset,
    ParseError,
    RandomSource,
    SparseRow,
    dataset_hash,
    parse_libsvm,
    write_libsvm,
)
from .objectives import (
    HALF_SQUARED,
    HINGE,
    LOGISTIC,
    GlmObjective,
    NonSmoothError,
    SmoothnessInfo,
    get_loss,
    prox_l1,
    smoothness,
)
from .schedules import (
    SamplingScheme,
    StepsizePolicy,
    armijo_policy,
    armijo_stochastic,
    default_stepsize,
    fixed_policy,
    lipschitz_scheme,
    minibatch_policy,
    minibatch_smoothness,
    sample,
    theory_policy,
    uniform_scheme,
)
from .optimizers import (
    METHODS,
    ConfigError,
    DivergenceError,
    DualState,
    GradientTable,
    RunConfig,
    RunResult,
    run,
    sdca_step,
)
from .diag import (
    StopRule,
    TraceRecord,
    dual_objective,
    duality_gap,
    enum_stats,
    enum_stats_batches,
    fd_grad,
    fit_linear_rate,
    read_trace,
    solve_reference,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ParseError",
    "RandomSource",
    "SparseRow",
    "dataset_hash",
    "parse_libsvm",
    "write_libsvm",
    "HALF_SQUARED",
    "HINGE",
    "LOGISTIC",
    "GlmObjective",
    "NonSmoothError",
    "SmoothnessInfo",
    "get_loss",
    "prox_l1",
    "smoothness",
    "SamplingScheme",
    "StepsizePolicy",
    "armijo_policy",
    "armijo_stochastic",
    "default_stepsize",
    "fixed_policy",
    "lipschitz_scheme",
    "minibatch_policy",
    "minibatch_smoothness",
    "sample",
    "theory_policy",
    "uniform_scheme",
    "METHODS",
    "ConfigError",
    "DivergenceError",
    "DualState",
    "GradientTable",
    "RunConfig",
    "RunResult",
    "run",
    "sdca_step",
    "StopRule",
    "TraceRecord",
    "dual_objective",
    "duality_gap",
    "enum_stats",
    "enum_stats_batches",
    "fd_grad",
    "fit_linear_rate",
    "read_trace",
    "solve_reference",
    "write_trace",
    "__version__",
]
