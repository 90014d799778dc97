"""Finite upper bounds for ``x1' (x1 x1' + sum a_i x_i x_i' + a_1 I)^-2 x1``.

:func:`recursive_c_bound` evaluates the bound produced by induction on
the dimension: rotate ``x1`` onto the first axis, split the other
vectors by whether they have a component along it, and recurse on the
remaining coordinates. The sampling checks confirm numerically that no
admissible coefficient vector exceeds it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from .distributions import RngStream
from .exceptions import DegenerateInputError, NumericError, ParameterError

__all__ = [
    "BoundReport",
    "recursive_c_bound",
    "quadratic_form",
    "empirical_sup_check",
    "appendix_b_terms",
    "appendix_b_uniform_check",
]

SPLIT_TOL = 1e-12
LOG_LO, LOG_HI = -8.0, 8.0


@dataclass
class BoundReport:
    recursive_bound: float
    empirical_sup: float
    samples: int
    margin: float
    tolerance: float = 1e-9

    @property
    def ok(self) -> bool:
        return self.margin >= -self.tolerance

    def as_record(self) -> dict:
        rec = asdict(self)
        rec["ok"] = self.ok
        return rec


def _householder(x):
    """Orthogonal P with P x = ||x|| e1 (a reflector, or I if already aligned)."""
    norm = float(np.linalg.norm(x))
    v = x.astype(float).copy()
    v[0] -= norm
    vn = float(v @ v)
    if vn <= (1e-300 + SPLIT_TOL * norm) ** 2:
        return np.eye(x.shape[0])
    return np.eye(x.shape[0]) - 2.0 * np.outer(v, v) / vn


def recursive_c_bound(x1, others=()) -> float:
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    others = [np.atleast_1d(np.asarray(o, dtype=float)) for o in others]
    p = x1.shape[0]
    for o in others:
        if o.shape != (p,):
            raise ParameterError(f"vector of shape {o.shape} does not match x1 of dimension {p}")
    nrm2 = float(x1 @ x1)
    if nrm2 == 0.0:
        return 0.0
    if p == 1 or not others:
        return 1.0 / nrm2
    P = _householder(x1)
    bs = [P @ o for o in others]
    vs, in_b = [], []
    for b in bs:
        lead = b[0]
        if abs(lead) < SPLIT_TOL * float(np.linalg.norm(b)) or lead == 0.0:
            vs.append(b[1:])
            in_b.append(False)
        else:
            vs.append(b[1:] / lead)
            in_b.append(True)
    if not any(in_b):
        return 1.0 / nrm2
    total = 0.0
    for i, flag in enumerate(in_b):
        if flag:
            rest = [v for k, v in enumerate(vs) if k != i]
            total += math.sqrt(recursive_c_bound(vs[i], rest))
    return (1.0 + total * total) / nrm2


def quadratic_form(x1, others, a):
    """``x1' M^-2 x1`` with ``M = x1 x1' + sum_i a[i] others[i] others[i]' + a[0] I``.

    ``a`` may be a matrix of coefficient rows; the result is then a vector.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    V = np.asarray(others, dtype=float).reshape(-1, x1.shape[0])
    a = np.asarray(a, dtype=float)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    p = x1.shape[0]
    M = np.broadcast_to(np.outer(x1, x1), (a.shape[0], p, p)).copy()
    M += a[:, :1, None] * np.eye(p)
    if V.shape[0]:
        M += np.einsum("sk,ki,kj->sij", a[:, 1:], V, V)
    try:
        sol = np.linalg.solve(M, np.broadcast_to(x1, (a.shape[0], p))[..., None])[..., 0]
        q = np.einsum("si,si->s", sol, sol)
    except np.linalg.LinAlgError:
        # extreme coefficient ratios can make M singular in double precision
        q = np.empty(a.shape[0])
        for s in range(a.shape[0]):
            try:
                v = np.linalg.solve(M[s], x1)
                q[s] = v @ v
            except np.linalg.LinAlgError:
                q[s] = _quadratic_form_mp(x1, V, a[s])
    if not np.all(np.isfinite(q)):
        raise NumericError("non-finite value of the quadratic form")
    return float(q[0]) if single else q


def _quadratic_form_mp(x1, others, a, dps=60):
    with mpmath.workdps(dps):
        p = len(x1)
        M = mpmath.matrix(p, p)
        for i in range(p):
            M[i, i] += mpmath.mpf(a[0])
            for j in range(p):
                M[i, j] += mpmath.mpf(x1[i]) * mpmath.mpf(x1[j])
        for k, v in enumerate(others):
            for i in range(p):
                for j in range(p):
                    M[i, j] += mpmath.mpf(a[k + 1]) * mpmath.mpf(v[i]) * mpmath.mpf(v[j])
        s = mpmath.lu_solve(M, mpmath.matrix([mpmath.mpf(t) for t in x1]))
        return float(sum(s[i] ** 2 for i in range(p)))


def _log_uniform(gen, shape):
    return 10.0 ** gen.uniform(LOG_LO, LOG_HI, size=shape)


def _corners(n):
    # every coordinate at either end of the sampling box
    grid = np.array(np.meshgrid(*[[10.0**LOG_LO, 10.0**LOG_HI]] * n, indexing="ij")).reshape(n, -1).T
    return grid


def empirical_sup_check(x1, others, n_samples: int, rng: RngStream, batch: int = 20_000, tol: float = 1e-9) -> BoundReport:
    """Largest sampled value of the quadratic form against the recursive bound.

    Coefficients are log-uniform on [1e-8, 1e8]; the box corners are
    always included. Samples within 1e-10 (relative) of the bound are
    re-evaluated in 60-digit arithmetic so that roundoff in the
    double-precision solve cannot masquerade as a violation.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    others = [np.atleast_1d(np.asarray(o, dtype=float)) for o in others]
    bound = recursive_c_bound(x1, others)
    n = 1 + len(others)
    if not np.any(x1):
        return BoundReport(0.0, 0.0, int(n_samples), 0.0, tol)
    best = -np.inf
    best_a = None
    done = 0
    pending = [_corners(n)] if n <= 12 else []
    while done < n_samples or pending:
        if pending:
            A = pending.pop()
        else:
            k = min(batch, n_samples - done)
            A = _log_uniform(rng.gen, (k, n))
            done += k
        q = quadratic_form(x1, others, A)
        suspect = np.flatnonzero(q > bound * (1.0 - 1e-10))
        for s in suspect:
            q[s] = _quadratic_form_mp(x1, others, A[s])
        j = int(np.argmax(q))
        if q[j] > best:
            best, best_a = float(q[j]), A[j]
    return BoundReport(bound, best, int(n_samples), bound - best, tol)


def appendix_b_terms(X, y):
    """Both sides of the per-observation identity for ``(X'DX)^-1 x_i z_i / y_i``.

    Returns ``(lhs, rhs_factor)`` where ``lhs[i] = ||(X'DX)^-1 x_i / y_i||``
    (the common factor ``|z_i|`` and ``tau**2`` removed) and
    ``rhs_factor[i] = sqrt(x_i' (x_i x_i' + sum_{j != i} (y_i/y_j) x_j x_j')^-2 x_i)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m, p = X.shape
    d = 1.0 / y
    G = (X.T * d) @ X
    lhs = np.linalg.norm(np.linalg.solve(G, (X * d[:, None]).T), axis=0)
    rhs = np.empty(m)
    for i in range(m):
        w = y[i] / y
        w[i] = 1.0
        Mi = (X.T * w) @ X
        rhs[i] = np.linalg.norm(np.linalg.solve(Mi, X[i]))
    return lhs, rhs


def appendix_b_uniform_check(X, z, n_samples: int, rng: RngStream, batch: int = 5_000, tol: float = 1e-9) -> BoundReport:
    """Sampled ``||(X'DX)^-1 X'D z||`` against ``sum_i |z_i| sqrt(C_i(X))``.

    ``D = diag(1 / (tau^2 y))``; tau^2 cancels. The weighted fit is
    solved through a row-scaled least-squares problem, which stays
    accurate when the weights span many decades.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    z = np.asarray(z, dtype=float).ravel()
    m, p = X.shape
    if z.shape[0] != m:
        raise ParameterError(f"design has {m} rows, responses {z.shape[0]}")
    if m < p or np.linalg.matrix_rank(X) < p:
        raise DegenerateInputError("design matrix does not have full column rank")
    C = [recursive_c_bound(X[i], [X[j] for j in range(m) if j != i]) for i in range(m)]
    bound = float(sum(abs(zi) * math.sqrt(c) for zi, c in zip(z, C)))
    best = 0.0
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        Y = _log_uniform(rng.gen, (k, m))
        if p == 1:
            # weighted mean form, exact for a single column
            d = 1.0 / Y
            x = X[:, 0]
            coef = (d * x) @ z / ((d * x) @ x)
            best = max(best, float(np.max(np.abs(coef))))
            done += k
            continue
        w = 1.0 / np.sqrt(Y)
        for s in range(k):
            coef, *_ = np.linalg.lstsq(X * w[s, :, None], z * w[s], rcond=None)
            best = max(best, float(np.linalg.norm(coef)))
        done += k
    return BoundReport(bound, best, int(n_samples), bound - best, tol)
