"""Bayesian quantile regression by data augmentation, with a sandwich variant."""

from .model import (
    BetaConditional,
    ChainState,
    ChainTrace,
    IllConditionedWarning,
    QuantileModel,
    beta_conditional,
    da_step,
    initial_state,
    log_posterior_unnorm,
    run_chain,
    sandwich_middle_params,
    sandwich_step,
    y_conditional_params,
)
from .quadrature import quadrature_posterior_mean, quadrature_posterior_moments
from .estimator import QuantileRegressionSampler
from .io import load_dataset, reference_model, write_trace_csv

__all__ = [
    "BetaConditional",
    "ChainState",
    "ChainTrace",
    "IllConditionedWarning",
    "QuantileModel",
    "QuantileRegressionSampler",
    "beta_conditional",
    "da_step",
    "initial_state",
    "load_dataset",
    "log_posterior_unnorm",
    "quadrature_posterior_mean",
    "quadrature_posterior_moments",
    "reference_model",
    "run_chain",
    "sandwich_middle_params",
    "sandwich_step",
    "write_trace_csv",
    "y_conditional_params",
]
