"""Ornstein-Uhlenbeck processes driven by Ornstein-Uhlenbeck noise.

Exact simulation, maximum likelihood drift estimation, the continuous-time
Durbin-Watson statistic and the associated serial correlation test.
"""

from oudw.errors import (
    DegeneratePathError,
    OudwError,
    RegimeError,
    SingularGramError,
)
from oudw.sde import (
    ModelParams,
    SamplePath,
    TransitionLaw,
    companion_matrix,
    laplace_check,
    simulate_euler,
    simulate_exact,
    stationary_covariance,
    stationary_moments,
    transition_covariance,
    transition_law,
    transition_matrix,
)
from oudw.functionals import SufficientStats, cumulative_sigma, sufficient_stats
from oudw.estimators import (
    EstimationResult,
    VarthetaResult,
    durbin_watson,
    estimate,
    estimate_rho,
    estimate_theta,
    estimate_vartheta,
)
from oudw.asymptotics import (
    AsymptoticLaw,
    WSamplerConfig,
    asymptotic_law,
    covariance_gamma,
    delta_matrix,
    limits,
    moment_ode_limit,
    quantile_4w2,
    quantile_table,
    sample_w,
)
from oudw.dw_test import TestOutcome, run_test, z_from_rho, z_statistic
from oudw.harness import (
    ExperimentSpec,
    ExperimentSummary,
    level_power_experiment,
    null_distribution_experiment,
    replicate,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticLaw",
    "DegeneratePathError",
    "EstimationResult",
    "ExperimentSpec",
    "ExperimentSummary",
    "ModelParams",
    "OudwError",
    "RegimeError",
    "SamplePath",
    "SingularGramError",
    "SufficientStats",
    "TestOutcome",
    "TransitionLaw",
    "VarthetaResult",
    "WSamplerConfig",
    "asymptotic_law",
    "companion_matrix",
    "covariance_gamma",
    "cumulative_sigma",
    "delta_matrix",
    "durbin_watson",
    "estimate",
    "estimate_rho",
    "estimate_theta",
    "estimate_vartheta",
    "laplace_check",
    "level_power_experiment",
    "limits",
    "moment_ode_limit",
    "null_distribution_experiment",
    "quantile_4w2",
    "quantile_table",
    "replicate",
    "run_test",
    "sample_w",
    "simulate_euler",
    "simulate_exact",
    "stationary_covariance",
    "stationary_moments",
    "sufficient_stats",
    "transition_covariance",
    "transition_law",
    "transition_matrix",
    "z_from_rho",
    "z_statistic",
]
