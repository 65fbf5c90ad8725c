"""Taylor's law for heavy-tailed data: samplers, moment ratios, tail fits and diagnostics."""

from .errors import (
    ConvergenceError,
    DegenerateError,
    DomainError,
    GenerationError,
    IllConditionedError,
    ParameterError,
    ParseError,
    RegimeError,
    SolverError,
    TaylorLawError,
)
from .distributions import (
    AR1,
    IID,
    Equicorrelated,
    ExponentialLaw,
    GaussianModulated,
    Heterogeneous,
    SampleSet,
    SlowlyVarying,
    StableLaw,
    TailModel,
    sample_f1,
    sample_pareto,
    sample_process,
    sample_stable_one_sided,
)
from .moments import LimitSpec, MomentSummary, implied_alpha, summarize, taylor_ratio, theoretical_limit
from .tailfit import alt_hill_curve, fit_gpd_mle, fit_negbinomial, fit_pareto_ls, hill
from .network import (
    Graph,
    NetworkProcess,
    assign_node_values,
    bfs_distances,
    gen_erdos_renyi,
    load_edge_list,
    node_activity,
    verify_distance_decorrelation,
)
from .asymptotics import (
    AsymptoticContext,
    condition_a_probe,
    solve_threshold,
    truncated_moment_exact,
    truncated_moment_theory,
)
from .analysis import convergence_diagnostic, log_spaced_sizes, ols_fit, taylor_points

__version__ = "0.1.0"
