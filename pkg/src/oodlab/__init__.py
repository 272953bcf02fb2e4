"""Non-monotonic target error under OOD samples: FLD analytics, bounds, Monte Carlo."""

__version__ = "0.1.0"

from .analytic import (
    expected_error_agnostic,
    expected_error_weighted,
    mse_decomposition,
    threshold_stats_agnostic,
    threshold_stats_weighted,
)
from .bound import BoundInputs, alpha_star_closed, dh_star, upper_bound_u
from .experiments import detect_shape, optimal_alpha_numeric, sweep_m
from .mixture import LabeledDataset, MixtureSpec, Origin, bayes_error, sample_balanced

__all__ = [
    "BoundInputs",
    "LabeledDataset",
    "MixtureSpec",
    "Origin",
    "alpha_star_closed",
    "bayes_error",
    "detect_shape",
    "dh_star",
    "expected_error_agnostic",
    "expected_error_weighted",
    "mse_decomposition",
    "optimal_alpha_numeric",
    "sample_balanced",
    "sweep_m",
    "threshold_stats_agnostic",
    "threshold_stats_weighted",
    "upper_bound_u",
]
