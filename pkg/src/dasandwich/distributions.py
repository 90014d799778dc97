"""Seeded random variate generation.

Every sampler takes an :class:`RngStream` as its first argument and
returns a plain Python float (or a 1-D array for :func:`sample_mvn`).
Parameter problems raise :class:`~dasandwich.exceptions.ParameterError`
naming the offending value; nothing is clamped silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .exceptions import NumericError, ParameterError

__all__ = [
    "RngStream",
    "GigParams",
    "sample_normal",
    "sample_exponential",
    "sample_mvn",
    "sample_inverse_gaussian",
    "sample_gig",
    "sample_asym_laplace",
    "asym_laplace_cdf",
    "asym_laplace_pdf",
    "quantile_constants",
]

_U64 = 2**64


class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    The stream is a PCG64 generator keyed by ``SeedSequence(seed,
    spawn_key=(stream_id,))``, which is how numpy derives statistically
    independent child streams. Instances are single-owner mutable state.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            if not 0 <= int(value) < _U64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform_open(self) -> float:
        """Uniform draw on (0, 1]."""
        return 1.0 - self.gen.random()


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


def sample_normal(rng: RngStream, mean: float = 0.0, sd: float = 1.0) -> float:
    _check_finite("mean", mean)
    _check_finite("sd", sd)
    if sd <= 0:
        raise ParameterError(f"sd must be positive, got {sd!r}")
    return mean + sd * rng.gen.standard_normal()


def sample_exponential(rng: RngStream, rate: float = 1.0) -> float:
    _check_finite("rate", rate)
    if rate <= 0:
        raise ParameterError(f"rate must be positive, got {rate!r}")
    return rng.gen.standard_exponential() / rate


def cholesky_lower(cov) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises NumericError with ``index`` set to the 1-based order of the
    first leading minor that is not positive definite. Pivots that are
    positive only through roundoff are treated as failures too.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ParameterError(f"covariance must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ParameterError("covariance has non-finite entries")
    scale = max(float(np.max(np.abs(cov))), np.finfo(float).tiny)
    if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
        raise ParameterError("covariance is not symmetric")
    L, info = lapack.dpotrf(cov, lower=1, clean=1)
    if info > 0:
        raise NumericError(f"leading minor of order {info} is not positive definite", index=int(info))
    if info < 0:
        raise NumericError(f"dpotrf rejected argument {-info}")
    piv = np.diag(L) ** 2
    tol = cov.shape[0] * np.finfo(float).eps * np.max(np.diag(cov))
    bad = np.flatnonzero(piv <= tol)
    if bad.size:
        k = int(bad[0]) + 1
        raise NumericError(f"leading minor of order {k} is numerically singular", index=k)
    return L


def sample_mvn(rng: RngStream, mean, cov) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    L = cholesky_lower(cov)
    if mean.shape != (L.shape[0],):
        raise ParameterError(f"mean has shape {mean.shape}, expected ({L.shape[0]},)")
    return mean + L @ rng.gen.standard_normal(L.shape[0])


def _ig_root(mu, lam, chi2):
    # Smaller root of the quadratic in the transformation method, written
    # without the cancellation of the textbook form.
    w = mu * chi2 / (2.0 * lam)
    return mu / (1.0 + w + np.sqrt(w * (2.0 + w)))


def sample_inverse_gaussian(rng: RngStream, mu: float, lam: float) -> float:
    """Inverse Gaussian draw with mean ``mu`` and shape ``lam``.

    Michael, Schucany & Haas transformation: the smaller root of the
    quadratic implied by a chi-square(1) draw, kept with probability
    ``mu / (mu + root)`` and otherwise replaced by ``mu**2 / root``.
    """
    _check_finite("mu", mu)
    _check_finite("lam", lam)
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu!r}")
    if lam <= 0:
        raise ParameterError(f"lam must be positive, got {lam!r}")
    nu = rng.gen.standard_normal()
    x = float(_ig_root(mu, lam, nu * nu))
    if rng.gen.random() * (mu + x) <= mu:
        return x
    return mu * (mu / x)


def _inverse_gaussian_many(gen: np.random.Generator, mu, lam):
    # Vectorised twin of sample_inverse_gaussian for the latent-variable
    # update; mu may contain +inf only where the caller handles it.
    mu = np.asarray(mu, dtype=float)
    nu = gen.standard_normal(mu.shape)
    u = gen.random(mu.shape)
    x = _ig_root(mu, lam, nu * nu)
    keep = u * (mu + x) <= mu
    return np.where(keep, x, mu * (mu / x))


@dataclass(frozen=True)
class GigParams:
    """Generalized inverse Gaussian law, density ∝ x^(lam-1) exp(-(a x + b / x) / 2)."""

    lam: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("lam", "a", "b"):
            _check_finite(name, getattr(self, name))
        if self.a < 0 or self.b < 0:
            raise ParameterError(f"GIG needs a >= 0 and b >= 0, got a={self.a!r}, b={self.b!r}")
        ok = (
            (self.a > 0 and self.b > 0)
            or (self.a > 0 and self.b == 0 and self.lam > 0)
            or (self.a == 0 and self.b > 0 and self.lam < 0)
        )
        if not ok:
            raise ParameterError(
                f"GIG(lam={self.lam!r}, a={self.a!r}, b={self.b!r}) is not normalizable"
            )

    def logpdf_unnorm(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return (self.lam - 1.0) * np.log(x) - 0.5 * (self.a * x + self.b / x)


def _gig_mode(lam, omega):
    # Mode of x^(lam-1) exp(-omega (x + 1/x) / 2); two algebraically equal
    # forms, each stable on its own side of lam = 1.
    if lam >= 1.0:
        return (lam - 1.0 + math.hypot(lam - 1.0, omega)) / omega
    return omega / (1.0 - lam + math.hypot(1.0 - lam, omega))


def _gig_piecewise_hat(rng, lam, omega):
    # Rejection from a three-piece hat: constant on (0, x0), power law on
    # (x0, 2/omega), exponential tail beyond. Needs 0 <= lam < 1.
    m = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    xs = max(x0, 2.0 / omega)

    def logf(x):
        return (lam - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x)

    k1 = math.exp(logf(m))
    a1 = k1 * x0
    if x0 < 2.0 / omega:
        k2 = math.exp(-omega)
        if lam > 0:
            a2 = k2 * ((2.0 / omega) ** lam - x0**lam) / lam
        else:
            a2 = k2 * math.log(2.0 / (omega * x0))
    else:
        k2, a2 = 0.0, 0.0
    k3 = xs ** (lam - 1.0)
    tail0 = math.exp(-0.5 * omega * xs)
    a3 = 2.0 * k3 * tail0 / omega
    total = a1 + a2 + a3
    while True:
        v = rng.gen.random() * total
        if v <= a1:
            x = x0 * v / a1
            logh = math.log(k1)
        elif v <= a1 + a2:
            v -= a1
            if lam > 0:
                x = (x0**lam + v * lam / k2) ** (1.0 / lam)
            else:
                x = x0 * math.exp(v / k2)
            logh = math.log(k2) + (lam - 1.0) * math.log(x)
        else:
            v -= a1 + a2
            x = -2.0 / omega * math.log(tail0 - v * omega / (2.0 * k3))
            logh = math.log(k3) - 0.5 * omega * x
        if x <= 0.0 or not math.isfinite(x):
            continue
        if math.log(rng.uniform_open()) + logh <= logf(x):
            return x


def _rou_bounds(lam, omega, m):
    # Extremes of (x - m) sqrt(f(x)) solve a cubic; roots via the
    # trigonometric form, with np.roots as a fallback.
    A = -(2.0 * lam + 2.0 + omega * m) / omega
    B = 2.0 * (lam - 1.0) * m / omega - 1.0
    C = m
    p = B - A * A / 3.0
    q = 2.0 * A**3 / 27.0 - A * B / 3.0 + C
    roots = None
    if p < 0:
        arg = -0.5 * q * math.sqrt(-27.0 / p**3)
        if -1.0 <= arg <= 1.0:
            phi = math.acos(arg)
            r = 2.0 * math.sqrt(-p / 3.0)
            roots = [r * math.cos((phi + 2.0 * math.pi * k) / 3.0) - A / 3.0 for k in range(3)]
    if roots is None:
        roots = [z.real for z in np.roots([1.0, A, B, C]) if abs(z.imag) < 1e-9 * max(1.0, abs(z))]
    lo = [x for x in roots if 0.0 < x < m]
    hi = [x for x in roots if x > m]
    if not lo or not hi:
        raise NumericError(f"no bounding rectangle for GIG(lam={lam}, omega={omega})")
    return min(lo), max(hi)


def _gig_rou_shift(rng, lam, omega):
    # Ratio of uniforms around the mode with the minimal bounding rectangle.
    m = _gig_mode(lam, omega)
    lm = math.log(m)
    c = m + 1.0 / m

    def logf(x):
        return (lam - 1.0) * (math.log(x) - lm) - 0.5 * omega * (x + 1.0 / x - c)

    xlo, xhi = _rou_bounds(lam, omega, m)
    vlo = (xlo - m) * math.exp(0.5 * logf(xlo))
    vhi = (xhi - m) * math.exp(0.5 * logf(xhi))
    while True:
        u = rng.uniform_open()
        v = vlo + (vhi - vlo) * rng.gen.random()
        x = v / u + m
        if x > 0.0 and 2.0 * math.log(u) <= logf(x):
            return x


def _gig_standard(rng, lam, omega):
    # x^(lam-1) exp(-omega (x + 1/x) / 2), lam >= 0, omega > 0
    if lam < 1.0 and omega <= 0.5:
        return _gig_piecewise_hat(rng, lam, omega)
    return _gig_rou_shift(rng, lam, omega)


def sample_gig(rng: RngStream, p: GigParams, method: str = "auto") -> float:
    """Draw from GIG(lam, a, b).

    ``method="auto"`` takes closed-form routes where they exist: a gamma
    draw when ``b == 0``, a reciprocal gamma when ``a == 0``, and an
    inverse Gaussian draw when ``lam == ±1/2``. ``method="rejection"``
    forces the general generator whenever ``a, b > 0``, which is what the
    reduction tests compare against.
    """
    if not isinstance(p, GigParams):
        raise ParameterError(f"expected GigParams, got {type(p).__name__}")
    if method not in ("auto", "rejection"):
        raise ParameterError(f"unknown GIG method {method!r}")
    lam, a, b = p.lam, p.a, p.b
    if b == 0.0:
        return rng.gen.standard_gamma(lam) * 2.0 / a
    if a == 0.0:
        return b / (2.0 * rng.gen.standard_gamma(-lam))
    if method == "auto":
        if lam == 0.5:
            return 1.0 / sample_inverse_gaussian(rng, math.sqrt(a / b), a)
        if lam == -0.5:
            return sample_inverse_gaussian(rng, math.sqrt(b / a), b)
    omega = math.sqrt(a * b)
    scale = math.sqrt(b / a)
    if lam >= 0:
        return scale * _gig_standard(rng, lam, omega)
    return scale / _gig_standard(rng, -lam, omega)


def quantile_constants(r: float) -> tuple[float, float]:
    """``(theta, tau2)`` of the normal variance-mean mixture for quantile ``r``."""
    _check_finite("r", r)
    if not 0.0 < r < 1.0:
        raise ParameterError(f"quantile r must lie in (0, 1), got {r!r}")
    return (1.0 - 2.0 * r) / (r * (1.0 - r)), 2.0 / (r * (1.0 - r))


def sample_asym_laplace(rng: RngStream, r: float) -> float:
    """Asymmetric Laplace draw with r-th quantile zero, as ``theta V + tau sqrt(V) U``."""
    theta, tau2 = quantile_constants(r)
    v = rng.gen.standard_exponential()
    u = rng.gen.standard_normal()
    return theta * v + math.sqrt(tau2 * v) * u


def asym_laplace_pdf(x, r: float):
    quantile_constants(r)
    x = np.asarray(x, dtype=float)
    return r * (1.0 - r) * np.where(x <= 0, np.exp((1.0 - r) * np.minimum(x, 0)), np.exp(-r * np.maximum(x, 0)))


def asym_laplace_cdf(x, r: float):
    quantile_constants(r)
    x = np.asarray(x, dtype=float)
    neg = r * np.exp((1.0 - r) * np.minimum(x, 0.0))
    pos = 1.0 - (1.0 - r) * np.exp(-r * np.maximum(x, 0.0))
    return np.where(x <= 0, neg, pos)
