"""Robust divide-and-conquer Bayesian model selection."""

from ._core import (
    ConfigError,
    DataError,
    NumericError,
    aggregate_model_probs,
    derive_seed,
    fit,
    generate_synthetic,
    geometric_median,
    log_marginal_likelihood,
    run_experiment,
    sample_posterior,
    spike_slab_inclusion,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "aggregate_model_probs",
    "derive_seed",
    "fit",
    "generate_synthetic",
    "geometric_median",
    "log_marginal_likelihood",
    "run_experiment",
    "sample_posterior",
    "spike_slab_inclusion",
]
