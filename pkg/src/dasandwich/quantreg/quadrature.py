"""Deterministic posterior moments for low-dimensional models.

The flat-prior posterior kernel is ``exp(-sum check_loss(residuals))``,
piecewise log-linear in the coefficients. Along a line the integral
splits at the kinks into pieces with closed forms (incomplete gamma
functions), so one coefficient is handled exactly. For two coefficients
that exact inner integral sits inside an outer adaptive quadrature,
broken where two kinks coincide.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from ..exceptions import ParameterError, ProprietyError
from .model import QuantileModel, log_posterior_unnorm

__all__ = ["quadrature_posterior_mean", "quadrature_posterior_moments"]


def _tail_slopes(model: QuantileModel, direction):
    # d/dt log s(t*direction) as t -> +inf
    xd = model.X @ direction
    r = model.r
    return float(np.sum(np.where(xd > 0, -(1.0 - r) * xd, r * xd)))


def _check_proper(model):
    for k in range(model.p):
        e = np.zeros(model.p)
        e[k] = 1.0
        for d in (e, -e):
            if _tail_slopes(model, d) >= 0:
                raise ProprietyError(f"posterior kernel does not decay along {d}")


def _segments(kinks):
    kinks = np.unique(kinks)
    edges = [-np.inf, *kinks.tolist(), np.inf]
    return list(zip(edges[:-1], edges[1:]))


def _segment_moments(logf, lo, hi, shift):
    """Exact integrals of t^k exp(logf(t) - shift), k = 0, 1, 2, over [lo, hi].

    ``logf`` must be affine on the segment. Integrate from the endpoint
    where ``logf`` is largest, in the variable u = distance from it; the
    pieces are lower incomplete gamma functions.
    """
    if np.isinf(lo) and np.isinf(hi):
        raise ParameterError("segment must have at least one finite end")
    if np.isinf(lo):
        t0, sign, L = hi, -1.0, np.inf
        slope = logf(hi) - logf(hi - 1.0)
    elif np.isinf(hi):
        t0, sign, L = lo, 1.0, np.inf
        slope = logf(lo + 1.0) - logf(lo)
    else:
        slope = (logf(hi) - logf(lo)) / (hi - lo)
        t0, sign = (hi, -1.0) if slope > 0 else (lo, 1.0)
        L = hi - lo
    # along u the exponent decays at rate d >= 0
    d = -sign * slope
    if d < 0:
        raise ProprietyError("posterior kernel grows along an unbounded direction")
    c = math.exp(logf(t0) - shift)
    if np.isfinite(L) and d * L < 1e-12:
        u = np.array([L ** (k + 1) / (k + 1) for k in range(3)])
    else:
        u = np.array([math.factorial(k) / d ** (k + 1) * special.gammainc(k + 1, d * L) for k in range(3)])
    # t = t0 + sign * u
    return c * np.array([u[0], t0 * u[0] + sign * u[1], t0**2 * u[0] + 2 * sign * t0 * u[1] + u[2]])


def _line_moments(logf, kinks, shift):
    out = np.zeros(3)
    for lo, hi in _segments(kinks):
        out += _segment_moments(logf, lo, hi, shift)
    return out


def quadrature_posterior_moments(model: QuantileModel, tol: float = 1e-8):
    """Posterior mean vector and covariance matrix for ``p <= 2``."""
    if model.p > 2:
        raise ParameterError(f"quadrature oracle supports p <= 2, got p = {model.p}")
    _check_proper(model)
    X, z = model.X, model.z
    if model.p == 1:
        x = X[:, 0]
        nz = x != 0
        kinks = z[nz] / x[nz]
        logf = lambda b: log_posterior_unnorm(model, [b])  # noqa: E731
        mom = _line_moments(logf, kinks, max(logf(t) for t in kinks))
        mean = mom[1] / mom[0]
        var = mom[2] / mom[0] - mean**2
        return np.array([mean]), np.array([[var]])

    # p == 2: inner over beta2 given beta1, outer over beta1
    x1, x2 = X[:, 0], X[:, 1]
    nz = x2 != 0
    # reference point for the exponent shift: the LAD-like peak on a kink grid
    ref = max(
        log_posterior_unnorm(model, b)
        for b in (np.linalg.lstsq(X[[i, j]], z[[i, j]], rcond=None)[0] for i in range(model.m) for j in range(i + 1, model.m))
        if np.all(np.isfinite(b))
    )

    def inner(b1):
        kinks = (z[nz] - x1[nz] * b1) / x2[nz]
        return _line_moments(lambda t: log_posterior_unnorm(model, [b1, t]), kinks, ref)

    cache = {}

    def piece(b1, k):
        if b1 not in cache:
            cache[b1] = inner(b1)
        return cache[b1][k]

    # the inner integral is smooth in b1 except where two kinks meet
    pts = []
    for i in range(model.m):
        for j in range(i + 1, model.m):
            A = X[[i, j]]
            if abs(np.linalg.det(A)) > 1e-12:
                pts.append(np.linalg.solve(A, z[[i, j]])[0])
    pts = np.unique(pts)
    M = np.zeros((3, 3))
    for lo, hi in _segments(pts):
        for k in range(3):
            M[0, k] += integrate.quad(lambda b, k=k: b**k * piece(b, 0), lo, hi, epsabs=1e-14, epsrel=tol, limit=200)[0]
        M[1, 0] += integrate.quad(lambda b: piece(b, 1), lo, hi, epsabs=1e-14, epsrel=tol, limit=200)[0]
        M[1, 1] += integrate.quad(lambda b: b * piece(b, 1), lo, hi, epsabs=1e-14, epsrel=tol, limit=200)[0]
        M[2, 0] += integrate.quad(lambda b: piece(b, 2), lo, hi, epsabs=1e-14, epsrel=tol, limit=200)[0]
    Z = M[0, 0]
    mean = np.array([M[0, 1], M[1, 0]]) / Z
    cov = np.array([[M[0, 2], M[1, 1]], [M[1, 1], M[2, 0]]]) / Z - np.outer(mean, mean)
    return mean, cov


def quadrature_posterior_mean(model: QuantileModel, tol: float = 1e-8) -> np.ndarray:
    return quadrature_posterior_moments(model, tol)[0]
