"""Large deviations of branching processes in random environment."""

from ._bpre import (
    BpreError,
    EnvironmentLaw,
    __version__,
    cell_identity,
    chernoff_bound,
    chi,
    estimate_lower,
    estimate_upper,
    exact_distribution,
    exact_population_tail,
    exact_sn_tail,
    lambda_star,
    log_mgf,
    psi,
    psi_two_env_closed_form,
    run_command,
    simulate,
    takeoff,
)

__all__ = [
    "BpreError",
    "EnvironmentLaw",
    "__version__",
    "cell_identity",
    "chernoff_bound",
    "chi",
    "estimate_lower",
    "estimate_upper",
    "exact_distribution",
    "exact_population_tail",
    "exact_sn_tail",
    "lambda_star",
    "log_mgf",
    "psi",
    "psi_two_env_closed_form",
    "run_command",
    "simulate",
    "takeoff",
]
