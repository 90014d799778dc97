"""Spectra of DA and sandwich kernels and the identities relating them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from ..exceptions import ParameterError, PositivityError, ReversibilityError
from .core import GroupAction, JointTable, Kernel, build_da_kernel, build_group_R, build_sandwich_kernel

__all__ = [
    "SvdBasis",
    "SpectralDecomposition",
    "SpectralReport",
    "PropertyReport",
    "svd_ratio",
    "eigen_mean_zero",
    "eigenvalues_mean_zero",
    "verify_lemma1",
    "domination_report",
    "check_shared_conditional",
    "verify_lemma2",
    "chi_square_distance",
    "chi_square_oracle",
]

TIE_TOL = 1e-10
NULL_TOL = 1e-8


def _ordered(values):
    # descending value, ties by ascending original index
    return np.argsort(-np.asarray(values), kind="stable")


def _complement_basis(w):
    """Orthonormal basis (columns) of the Euclidean complement of ``sqrt(w)``."""
    s = np.sqrt(w)
    return null_space(s[None, :] / np.linalg.norm(s))


@dataclass(frozen=True, eq=False)
class SvdBasis:
    """Singular system of ``f(x, y) / (f_X(x) f_Y(y))``.

    ``beta`` has ``min(|X|, |Y|)`` entries starting with ``beta[0] = 1``.
    ``g_basis`` (|X| x |X|) and ``h_basis`` (|Y| x |Y|) hold complete
    bases orthonormal in L2(f_X) and L2(f_Y); column 0 is the constant
    function and columns past ``len(beta)`` pair with singular value 0.
    """

    beta: np.ndarray
    g_basis: np.ndarray
    h_basis: np.ndarray

    def beta_padded(self, k: int) -> np.ndarray:
        out = np.zeros(k)
        n = min(k, self.beta.shape[0])
        out[:n] = self.beta[:n]
        return out


def svd_ratio(table: JointTable) -> SvdBasis:
    fx, fy = table.f_x, table.f_y
    A = table.f / np.sqrt(np.outer(fx, fy))
    Qx, Qy = _complement_basis(fx), _complement_basis(fy)
    # constants are an exact singular pair; decompose what is left
    U, s, Vt = np.linalg.svd(Qx.T @ A @ Qy, full_matrices=True)
    k = min(table.shape) - 1
    s = s[:k]
    gx = np.column_stack([np.sqrt(fx), Qx @ U]) / np.sqrt(fx)[:, None]
    hy = np.column_stack([np.sqrt(fy), Qy @ Vt.T]) / np.sqrt(fy)[:, None]
    beta = np.concatenate([[1.0], s])
    return SvdBasis(beta, gx, hy)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues on the mean-zero subspace with L2(pi)-orthonormal eigenfunctions."""

    values: np.ndarray
    vectors: np.ndarray
    symmetry_residual: float


def eigen_mean_zero(K: Kernel) -> SpectralDecomposition:
    """Symmetrise ``K`` with sqrt(pi) weights and diagonalise on the mean-zero subspace."""
    r = np.sqrt(K.pi)
    S = r[:, None] * K.P / r[None, :]
    resid = float(np.max(np.abs(S - S.T)))
    if resid > NULL_TOL:
        raise ReversibilityError(f"symmetrised kernel is asymmetric by {resid:.3e}")
    Q = _complement_basis(K.pi)
    if Q.shape[1] == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((K.n, 0)), resid)
    S0 = Q.T @ (0.5 * (S + S.T)) @ Q
    vals, W = np.linalg.eigh(S0)
    order = _ordered(vals)
    vecs = (Q @ W[:, order]) / r[:, None]
    return SpectralDecomposition(vals[order], vecs, resid)


def eigenvalues_mean_zero(K: Kernel) -> np.ndarray:
    return eigen_mean_zero(K).values


@dataclass
class PropertyReport:
    """Outcome of a numerical identity check. Violations are recorded, not raised."""

    name: str
    max_residual: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.max_residual < self.tolerance)


def verify_lemma1(table: JointTable, tol: float = 1e-9) -> PropertyReport:
    """Check ``P_X h_i = beta_i g_i``, ``P_Y g_i = beta_i h_i`` and ``lambda_i = beta_i**2``."""
    basis = svd_ratio(table)
    nx, ny = table.shape
    k = min(nx, ny)
    g, h, beta = basis.g_basis, basis.h_basis, basis.beta
    Px, Py = table.y_given_x, table.x_given_y
    # the constant pair is part of the decomposition too
    res_px = float(np.max(np.abs(Px @ h[:, :k] - g[:, :k] * beta)))
    res_py = float(np.max(np.abs(Py @ g[:, :k] - h[:, :k] * beta)))
    if ny > k:
        res_px = max(res_px, float(np.max(np.abs(Px @ h[:, k:]))))
    if nx > k:
        res_py = max(res_py, float(np.max(np.abs(Py @ g[:, k:]))))
    lam = eigenvalues_mean_zero(build_da_kernel(table))
    beta2 = np.sort(basis.beta_padded(nx)[1:] ** 2)[::-1]
    res_lam = float(np.max(np.abs(lam - beta2))) if lam.size else 0.0
    return PropertyReport(
        "singular_system",
        max(res_px, res_py, res_lam),
        tol,
        {"px_residual": res_px, "py_residual": res_py, "eigen_residual": res_lam, "lambda": lam, "beta": basis.beta},
    )


@dataclass
class SpectralReport:
    """Side-by-side spectra of the DA kernel K and the sandwich kernel K*."""

    lam: np.ndarray
    lam_star: np.ndarray
    trace_K: float
    trace_Kstar: float
    l: int
    N: list
    i_star: int
    e_basis: np.ndarray
    strict_norm_drop: bool
    beta: np.ndarray
    min_singular_value: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_record(self) -> dict:
        """Flat record; vectors become comma-joined round-trip floats."""

        def join(v):
            return ",".join(repr(float(x)) for x in v)

        return {
            "lambda": join(self.lam),
            "lambda_star": join(self.lam_star),
            "trace_K": repr(float(self.trace_K)),
            "trace_Kstar": repr(float(self.trace_Kstar)),
            "beta": join(self.beta),
            "l": str(self.l),
            "N": ",".join(str(i) for i in self.N),
            "i_star": str(self.i_star),
            "strict_norm_drop": "true" if self.strict_norm_drop else "false",
            "min_singular_value": repr(float(self.min_singular_value)),
            "violations": ";".join(self.violations),
            "ok": "true" if self.ok else "false",
        }


def _multiplicity(values, tol=TIE_TOL):
    """Number of leading entries equal to the first within ``tol`` (0 if empty)."""
    if len(values) == 0:
        return 0
    return int(np.sum(np.abs(np.asarray(values) - values[0]) <= tol))


def domination_report(table: JointTable, R: Kernel, tol: float = 1e-10) -> SpectralReport:
    """Compare the spectra of the DA kernel and the sandwich kernel built with ``R``."""
    if not R.is_idempotent(1e-8):
        raise ParameterError(f"R is not idempotent: max |R^2 - R| = {np.max(np.abs(R.P @ R.P - R.P)):.3e}")
    K = build_da_kernel(table)
    Ks = build_sandwich_kernel(table, R)
    dec = eigen_mean_zero(K)
    lam = dec.values
    lam_star = eigenvalues_mean_zero(Ks)
    basis = svd_ratio(table)
    beta = basis.beta
    nonconst = beta[1:]
    l = _multiplicity(nonconst)
    N = [i + 1 for i, b in enumerate(nonconst) if b > TIE_TOL]
    i_star = _multiplicity(lam)

    sigma_min = 0.0
    strict = False
    if l and nonconst[0] > TIE_TOL:
        H = basis.h_basis[:, 1 : l + 1]
        w = np.sqrt(table.f_y)[:, None]
        sigma_min = float(np.linalg.svd(w * ((R.P - np.eye(R.n)) @ H), compute_uv=False).min())
        strict = sigma_min > NULL_TOL

    trace_K = float(np.trace(K.P) - 1.0)
    trace_Ks = float(np.trace(Ks.P) - 1.0)
    violations = []
    worst = float(np.max(lam_star - lam)) if lam.size else 0.0
    if worst > tol:
        violations.append(f"eigenvalue domination fails by {worst:.3e}")
    if trace_Ks > trace_K + tol:
        violations.append(f"trace(K*) exceeds trace(K) by {trace_Ks - trace_K:.3e}")
    for name, vals in (("K", lam), ("K*", lam_star)):
        if vals.size and (vals.min() < -tol or vals.max() > 1 + tol):
            violations.append(f"spectrum of {name} leaves [0, 1]")
    return SpectralReport(lam, lam_star, trace_K, trace_Ks, l, N, i_star, dec.vectors, strict, beta, sigma_min, violations)


def check_shared_conditional(table: JointTable, action: GroupAction, tol: float = 1e-12) -> bool:
    """True iff ``f(x | y) == f(x | g y)`` for every group element, x and y."""
    if action.n_states != table.shape[1]:
        raise ParameterError(f"action on {action.n_states} states, table has {table.shape[1]} columns")
    cond = table.x_given_y
    gap = max(float(np.max(np.abs(cond - cond[perm]))) for perm in action.perms)
    return gap < tol


def verify_lemma2(f_y, action: GroupAction, tol: float = 1e-10, rng=None) -> PropertyReport:
    """Check that R projects onto the orbit-constant functions.

    Four residuals: R fixes orbit indicators, R h is invariant for every
    h, the spectrum of R is {0, 1}, and the fixed space of R has exactly
    one dimension per orbit (so it contains nothing but orbit-constant
    functions).
    """
    f_y = np.asarray(f_y, dtype=float)
    R = build_group_R(f_y, action)
    labels = action.orbit_labels()
    n_orbits = int(labels.max()) + 1
    ind = (labels[:, None] == np.arange(n_orbits)[None, :]).astype(float)
    res_fix = float(np.max(np.abs(R.P @ ind - ind)))

    # R applied to the identity matrix covers every h by linearity
    RH = R.P
    res_inv = max(float(np.max(np.abs(RH[perm, :] - RH))) for perm in action.perms)

    r = np.sqrt(f_y)
    S = r[:, None] * R.P / r[None, :]
    ev = np.linalg.eigvalsh(0.5 * (S + S.T))
    res_eig = float(np.max(np.minimum(np.abs(ev), np.abs(ev - 1.0))))
    n_fixed = int(np.sum(np.abs(ev - 1.0) < 1e-6))
    res_dim = float(abs(n_fixed - n_orbits))

    return PropertyReport(
        "group_projection",
        max(res_fix, res_inv, res_eig, res_dim),
        tol,
        {
            "fixed_residual": res_fix,
            "invariance_residual": res_inv,
            "eigen_residual": res_eig,
            "fixed_dimension": n_fixed,
            "n_orbits": n_orbits,
            "idempotence_residual": float(np.max(np.abs(R.P @ R.P - R.P))),
            "balance_residual": Kernel.balance_residual(R.P, f_y),
        },
    )


def _kernel_of(obj):
    return build_da_kernel(obj) if isinstance(obj, JointTable) else obj


def chi_square_distance(table, x0: int, n: int, tol: float = 1e-10) -> float:
    """Chi-square distance from the n-step law started at ``x0`` to stationarity.

    Evaluated spectrally as ``sum_i alpha_i**(2n) e_i(x0)**2``. ``table``
    may be a JointTable (its DA kernel is used) or a Kernel.
    """
    K = _kernel_of(table)
    if not 0 <= x0 < K.n:
        raise ParameterError(f"state {x0!r} out of range for {K.n} states")
    if n < 0:
        raise ParameterError(f"step count must be nonnegative, got {n!r}")
    dec = eigen_mean_zero(K)
    if dec.values.size and dec.values.min() < -tol:
        raise PositivityError(f"kernel has eigenvalue {dec.values.min():.3e} < 0")
    alpha = np.clip(dec.values, 0.0, None)
    return float(np.sum(alpha ** (2 * n) * dec.vectors[x0] ** 2))


def chi_square_oracle(table, x0: int, n: int) -> float:
    """Same quantity from the x0 row of the n-th matrix power."""
    K = _kernel_of(table)
    row = np.linalg.matrix_power(K.P, n)[x0]
    return float(np.sum((row - K.pi) ** 2 / K.pi))
