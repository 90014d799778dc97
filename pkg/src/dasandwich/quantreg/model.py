"""Data-augmentation and sandwich samplers for Bayesian quantile regression.

The latent-variable model writes each error as ``theta*y + tau*sqrt(y)*U``
with ``y ~ Exp(1)``, so that given ``y`` the coefficients are Gaussian and
given the coefficients each ``y_i`` is GIG(1/2, ., .). The sandwich
variant (median only) inserts a rescaling ``y -> g*y`` between the two
conditional draws, with ``g`` drawn from its exact conditional law.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..distributions import GigParams, RngStream, _inverse_gaussian_many, quantile_constants, sample_gig
from ..exceptions import DegenerateInputError, NumericError, ParameterError, UnsupportedQuantileError

__all__ = [
    "QuantileModel",
    "ChainState",
    "ChainTrace",
    "BetaConditional",
    "IllConditionedWarning",
    "beta_conditional",
    "y_conditional_params",
    "sandwich_middle_params",
    "da_step",
    "sandwich_step",
    "log_posterior_unnorm",
    "run_chain",
    "initial_state",
]

COND_LIMIT = 1e12
Q_FLOOR = 1e-14


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class QuantileModel:
    """Design ``X`` (m x p, full column rank), responses ``z`` and quantile ``r``."""

    X: np.ndarray
    z: np.ndarray
    r: float = 0.5

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        z = np.array(self.z, dtype=float).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ParameterError(f"design must be a matrix, got {X.ndim} dimensions")
        m, p = X.shape
        if z.shape[0] != m:
            raise ParameterError(f"design has {m} rows but there are {z.shape[0]} responses")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(z))):
            raise ParameterError("design or responses contain non-finite values")
        if m < p:
            raise DegenerateInputError(f"need m >= p, got m={m}, p={p}")
        sv = np.linalg.svd(X, compute_uv=False)
        if p == 0 or sv[-1] <= 1e-10 * sv[0]:
            raise DegenerateInputError("design matrix does not have full column rank")
        quantile_constants(self.r)
        for arr in (X, z):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "r", float(self.r))

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def theta(self) -> float:
        return quantile_constants(self.r)[0]

    @property
    def tau2(self) -> float:
        return quantile_constants(self.r)[1]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.z).tobytes())
        h.update(repr(self.r).encode())
        return h.hexdigest()[:16]


@dataclass
class ChainState:
    beta: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if not (np.all(np.isfinite(self.beta)) and np.all(np.isfinite(self.y))):
            raise ParameterError("chain state has non-finite entries")
        if np.any(self.y <= 0):
            raise ParameterError(f"latent y must be positive, got min {self.y.min()!r}")


@dataclass
class ChainTrace:
    """Retained draws plus what is needed to regenerate them."""

    beta: np.ndarray
    kind: str
    seed: int
    stream_id: int
    model_fingerprint: str
    y: np.ndarray | None = None
    iterations: np.ndarray | None = None
    settings: dict = field(default_factory=dict)

    def __len__(self):
        return self.beta.shape[0]

    @property
    def draws(self) -> list[ChainState]:
        if self.y is None:
            raise ParameterError("latent draws were not kept for this trace")
        return [ChainState(b, y) for b, y in zip(self.beta, self.y)]


class BetaConditional(NamedTuple):
    mu: np.ndarray
    Sigma: np.ndarray
    condition_number: float
    warning: str | None = None


def _check_y(y, m):
    y = np.asarray(y, dtype=float)
    if y.shape != (m,):
        raise ParameterError(f"latent vector has shape {y.shape}, expected ({m},)")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ParameterError("latent y must be finite and strictly positive")
    return y


def beta_conditional(model: QuantileModel, y) -> BetaConditional:
    """Normal law of the coefficients given the latent vector."""
    y = _check_y(y, model.m)
    X, z = model.X, model.z
    d = 1.0 / (model.tau2 * y)
    prec = (X.T * d) @ X
    cond = float(np.linalg.cond(prec))
    msg = None
    if cond > COND_LIMIT:
        msg = f"X^T D X has condition number {cond:.3e}"
        warnings.warn(msg, IllConditionedWarning, stacklevel=2)
    try:
        c = cho_factor(prec, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"X^T D X is not numerically positive definite: {exc}") from None
    rhs = X.T @ (d * z) - (model.theta / model.tau2) * X.sum(axis=0)
    mu = cho_solve(c, rhs)
    Sigma = cho_solve(c, np.eye(model.p))
    return BetaConditional(mu, 0.5 * (Sigma + Sigma.T), cond, msg)


def y_conditional_params(model: QuantileModel, beta, i: int) -> GigParams:
    """GIG law of ``y_i`` given the coefficients."""
    beta = np.asarray(beta, dtype=float)
    resid = model.z[i] - model.X[i] @ beta
    tau2, theta = model.tau2, model.theta
    return GigParams(0.5, (2.0 * tau2 + theta**2) / tau2, resid**2 / tau2)


def _weighted_rss(X, z, d):
    # explicit residual of the D-weighted least-squares fit, so Q >= 0
    Xd = X.T * d
    coef = np.linalg.solve(Xd @ X, Xd @ z)
    resid = z - X @ coef
    return max(float(resid @ (d * resid)), 0.0)


def sandwich_middle_params(model: QuantileModel, y) -> GigParams:
    """GIG law of the scale ``g`` in the group move ``y -> g*y`` (median only).

    The conditional density of ``g`` is proportional to
    ``g**((m+p)/2 - 1) * exp(-g*sum(y)) * exp(-Q / (2g))`` where ``Q`` is
    the D-weighted residual sum of squares of the least-squares fit.
    """
    if model.r != 0.5:
        raise UnsupportedQuantileError(f"the sandwich move is only available for r = 0.5, got r = {model.r!r}")
    y = _check_y(y, model.m)
    Q = _weighted_rss(model.X, model.z, 1.0 / (model.tau2 * y))
    if Q < Q_FLOOR:
        Q = 0.0
    return GigParams(0.5 * (model.m + model.p), 2.0 * float(y.sum()), Q)


def log_posterior_unnorm(model: QuantileModel, beta) -> float:
    """Log of the flat-prior posterior kernel, up to the factor r^m (1-r)^m."""
    beta = np.asarray(beta, dtype=float)
    e = model.z - model.X @ beta
    r = model.r
    return float(np.sum(np.where(e <= 0, (1.0 - r) * e, -r * e)))


class _Kernel:
    """Precomputed pieces shared by the step functions and the chain loop."""

    def __init__(self, model: QuantileModel):
        self.model = model
        self.X = model.X
        self.XT = np.ascontiguousarray(model.X.T)
        self.z = model.z
        self.tau2 = model.tau2
        self.theta = model.theta
        self.a = (2.0 * self.tau2 + self.theta**2) / self.tau2
        self.shift = (self.theta / self.tau2) * model.X.sum(axis=0)

    def draw_y(self, gen, beta):
        e = self.z - self.X @ beta
        absr = np.abs(e)
        zero = absr == 0.0
        if zero.any():
            # b = 0: the GIG(1/2, a, 0) law is Gamma(1/2, rate a/2)
            safe = np.where(zero, 1.0, absr)
            mu = math.sqrt(self.a * self.tau2) / safe
            w = _inverse_gaussian_many(gen, mu, self.a)
            y = 1.0 / w
            y[zero] = gen.standard_gamma(0.5, size=int(zero.sum())) * 2.0 / self.a
            return y
        mu = math.sqrt(self.a * self.tau2) / absr
        return 1.0 / _inverse_gaussian_many(gen, mu, self.a)

    def draw_beta(self, gen, y):
        d = 1.0 / (self.tau2 * y)
        prec = (self.XT * d) @ self.X
        L = np.linalg.cholesky(prec)
        rhs = self.XT @ (d * self.z) - self.shift
        mu = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        return mu + np.linalg.solve(L.T, gen.standard_normal(self.X.shape[1]))

    def draw_g(self, rng, y):
        Q = _weighted_rss(self.X, self.z, 1.0 / (self.tau2 * y))
        lam = 0.5 * (self.X.shape[0] + self.X.shape[1])
        return sample_gig(rng, GigParams(lam, 2.0 * float(y.sum()), Q if Q >= Q_FLOOR else 0.0))


def initial_state(model: QuantileModel) -> ChainState:
    """Least-squares coefficients and unit latent variables."""
    beta, *_ = np.linalg.lstsq(model.X, model.z, rcond=None)
    return ChainState(beta, np.ones(model.m))


def da_step(model: QuantileModel, state: ChainState, rng: RngStream, _kernel=None) -> ChainState:
    """One DA iteration: y ~ pi(y | beta, z), then beta ~ pi(beta | y, z)."""
    k = _kernel or _Kernel(model)
    y = k.draw_y(rng.gen, state.beta)
    return ChainState(k.draw_beta(rng.gen, y), y)


def sandwich_step(model: QuantileModel, state: ChainState, rng: RngStream, force_g=None, _kernel=None) -> ChainState:
    """One sandwich iteration: y | beta, then y -> g*y, then beta | g*y.

    ``force_g`` replaces the random scale (``force_g=1`` recovers the DA
    step); it exists for testing.
    """
    if model.r != 0.5:
        raise UnsupportedQuantileError(f"the sandwich move is only available for r = 0.5, got r = {model.r!r}")
    k = _kernel or _Kernel(model)
    y = k.draw_y(rng.gen, state.beta)
    g = k.draw_g(rng, y) if force_g is None else float(force_g)
    y = g * y
    return ChainState(k.draw_beta(rng.gen, y), y)


KINDS = ("da", "sandwich")


def run_chain(
    model: QuantileModel,
    kind: str = "da",
    n_iter: int = 10_000,
    burn_in: int = 1_000,
    thin: int = 1,
    seed: int = 0,
    stream_id: int = 0,
    init: ChainState | None = None,
    keep_y: bool = False,
) -> ChainTrace:
    """Run ``burn_in + n_iter`` iterations, keeping every ``thin``-th post-burn-in draw."""
    kind = kind.lower()
    if kind not in KINDS:
        raise ParameterError(f"unknown chain kind {kind!r}; expected one of {KINDS}")
    if kind == "sandwich" and model.r != 0.5:
        raise UnsupportedQuantileError(f"the sandwich move is only available for r = 0.5, got r = {model.r!r}")
    for name, v, lo in (("n_iter", n_iter, 1), ("burn_in", burn_in, 0), ("thin", thin, 1)):
        if int(v) != v or v < lo:
            raise ParameterError(f"{name} must be an integer >= {lo}, got {v!r}")
    rng = RngStream(seed, stream_id)
    gen = rng.gen
    k = _Kernel(model)
    state = init or initial_state(model)
    beta = state.beta.copy()
    n_keep = n_iter // thin
    betas = np.empty((n_keep, model.p))
    ys = np.empty((n_keep, model.m)) if keep_y else None
    its = np.empty(n_keep, dtype=np.int64)
    sandwich = kind == "sandwich"
    j = 0
    for it in range(burn_in + n_iter):
        y = k.draw_y(gen, beta)
        if sandwich:
            y = k.draw_g(rng, y) * y
        beta = k.draw_beta(gen, y)
        t = it - burn_in + 1
        if t > 0 and t % thin == 0 and j < n_keep:
            betas[j] = beta
            its[j] = t
            if keep_y:
                ys[j] = y
            j += 1
    return ChainTrace(
        betas,
        kind,
        rng.seed,
        rng.stream_id,
        model.fingerprint(),
        y=ys,
        iterations=its,
        settings={"n_iter": n_iter, "burn_in": burn_in, "thin": thin, "r": model.r},
    )
