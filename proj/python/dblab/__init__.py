"""Finite-horizon thinking/doing bandit lab."""

from ._core import (  # noqa: F401
    ModelParams,
    ProgressModel,
    SolverError,
    ValidationError,
    backload,
    belief_thresholds,
    doing_time_to_reach,
    dp_reduced,
    dp_two_stage,
    hail_mary_belief,
    hail_mary_time,
    load_config,
    no_solution_prob,
    posterior,
    route_probabilities,
    simulate,
    solution_density,
    solve,
    solve_infinite_horizon,
    trajectory_probabilities,
    validate_model,
)
