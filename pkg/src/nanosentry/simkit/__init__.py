"""Monte Carlo validation: random-walk channel oracle and full-chain simulation."""

from .roc import RocCurve, parse_grid, roc_sweep
from .trials import (
    OperatingPointEstimate,
    TrialOutcome,
    default_thresholds,
    estimate_operating_point,
    estimate_operating_points,
    simulate_trial,
)
from .walker import (
    WalkerRun,
    binomial_ci,
    convergence_check,
    random_walk_first_hit,
    random_walk_first_hits,
)

__all__ = [
    "OperatingPointEstimate",
    "RocCurve",
    "TrialOutcome",
    "WalkerRun",
    "binomial_ci",
    "convergence_check",
    "default_thresholds",
    "estimate_operating_point",
    "estimate_operating_points",
    "parse_grid",
    "random_walk_first_hit",
    "random_walk_first_hits",
    "roc_sweep",
    "simulate_trial",
]
