"""scikit-learn style front end for the samplers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .._validation import check_choice, check_int, check_quantile
from .model import QuantileModel, run_chain


class QuantileRegressionSampler(RegressorMixin, BaseEstimator):
    """Posterior sampling for linear quantile regression under a flat prior.

    Parameters
    ----------
    quantile : float, default=0.5
        Target quantile r in (0, 1).
    algorithm : {"da", "sandwich"}, default="da"
        Plain data augmentation, or the sandwich chain with the scale-group
        move (requires ``quantile=0.5``).
    n_iter, burn_in, thin : int
        Post-burn-in iterations, discarded iterations, thinning interval.
    fit_intercept : bool, default=False
        Prepend a column of ones to the design.
    seed, stream_id : int
        Identify the random stream; equal values give identical fits.
    keep_latent : bool, default=False
        Store the latent draws in ``trace_``.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Posterior mean of the slope coefficients.
    intercept_ : float
        Posterior mean of the intercept (0.0 when ``fit_intercept=False``).
    coef_std_ : ndarray
        Posterior standard deviations, intercept first when fitted.
    trace_ : ChainTrace
    """

    def __init__(
        self,
        quantile=0.5,
        algorithm="da",
        n_iter=10_000,
        burn_in=1_000,
        thin=1,
        fit_intercept=False,
        seed=0,
        stream_id=0,
        keep_latent=False,
    ):
        self.quantile = quantile
        self.algorithm = algorithm
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.thin = thin
        self.fit_intercept = fit_intercept
        self.seed = seed
        self.stream_id = stream_id
        self.keep_latent = keep_latent

    def _design(self, X):
        if self.fit_intercept:
            return np.column_stack([np.ones(X.shape[0]), X])
        return X

    def fit(self, X, y):
        """Run the chain on design ``X`` and responses ``y``."""
        X, y = validate_data(self, X, y, dtype=float, y_numeric=True)
        n_coef = X.shape[1] + bool(self.fit_intercept)
        if X.shape[0] < n_coef:
            raise ValueError(f"n_samples={X.shape[0]} is fewer than the {n_coef} coefficients")
        check_quantile(self.quantile)
        check_choice("algorithm", self.algorithm, ("da", "sandwich"))
        check_int("n_iter", self.n_iter, 1)
        check_int("burn_in", self.burn_in, 0)
        check_int("thin", self.thin, 1)
        model = QuantileModel(self._design(X), y, self.quantile)
        self.trace_ = run_chain(
            model,
            self.algorithm,
            n_iter=self.n_iter,
            burn_in=self.burn_in,
            thin=self.thin,
            seed=self.seed,
            stream_id=self.stream_id,
            keep_y=self.keep_latent,
        )
        means = self.trace_.beta.mean(axis=0)
        self.coef_std_ = self.trace_.beta.std(axis=0, ddof=1) if len(self.trace_) > 1 else np.zeros_like(means)
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(means[0]), means[1:]
        else:
            self.intercept_, self.coef_ = 0.0, means
        return self

    def predict(self, X):
        """Posterior-mean linear predictor."""
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=float, reset=False)
        return X @ self.coef_ + self.intercept_

    def posterior_draws(self):
        """Retained coefficient draws, intercept column first when fitted."""
        check_is_fitted(self, "trace_")
        return self.trace_.beta
