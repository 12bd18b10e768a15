"""
Benchmark library for low-rank matrix factorization solvers.

Submodules: linalg (dense kernels), problems (target synthesis),
initializers, solvers (step kernels + run loop), diagnostics (metrics and
the rate classifier), nora (adapter finetuning toy), expconfig / tracefile /
verdicts / cli (the benchmark harness).
"""
from .diagnostics import (
    IterRecord,
    RateEstimate,
    Trace,
    classify_rate,
    core_sigma_floor,
    core_sigma_min,
    optimality_error,
    procrustes_distance,
    rate_fit_floor,
    residual_leakage,
    weak_opt_residual,
)
from .initializers import (
    InitResult,
    InitSpec,
    nystrom_init,
    nystrom_via_gradient,
    perturbed_nystrom_init,
    small_gaussian_init,
)
from .linalg import (
    NumericalFailure,
    SingularGramError,
    SvdResult,
    gaussian,
    gram_solve,
    numerical_rank,
    pinv,
    svd,
)
from .nora import LinearFinetuneProblem, NoraConfig, nora_init, run_nora
from .problems import (
    Problem,
    TargetSpec,
    build_problem,
    classify_regime,
    parse_spectrum,
    synthesize_target,
)
from .solvers import (
    IterState,
    Schedule,
    SolverConfig,
    gd_step,
    run,
    scaledgd_asym_step,
    scaledgd_lambda_step,
    scaledgd_sym_step,
)

__version__ = "0.1.0"

__all__ = [
    "IterRecord",
    "RateEstimate",
    "Trace",
    "classify_rate",
    "core_sigma_floor",
    "core_sigma_min",
    "optimality_error",
    "procrustes_distance",
    "rate_fit_floor",
    "residual_leakage",
    "weak_opt_residual",
    "InitResult",
    "InitSpec",
    "nystrom_init",
    "nystrom_via_gradient",
    "perturbed_nystrom_init",
    "small_gaussian_init",
    "NumericalFailure",
    "SingularGramError",
    "SvdResult",
    "gaussian",
    "gram_solve",
    "numerical_rank",
    "pinv",
    "svd",
    "LinearFinetuneProblem",
    "NoraConfig",
    "nora_init",
    "run_nora",
    "Problem",
    "TargetSpec",
    "build_problem",
    "classify_regime",
    "parse_spectrum",
    "synthesize_target",
    "IterState",
    "Schedule",
    "SolverConfig",
    "gd_step",
    "run",
    "scaledgd_asym_step",
    "scaledgd_lambda_step",
    "scaledgd_sym_step",
]
