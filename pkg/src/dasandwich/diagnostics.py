"""Autocorrelation and effective sample size for scalar MCMC traces."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

__all__ = [
    "DegenerateTraceWarning",
    "TraceSummary",
    "autocorrelation",
    "effective_sample_size",
    "summarize_trace",
    "ess_difference_bootstrap",
]


class DegenerateTraceWarning(RuntimeWarning):
    pass


def _as_trace(trace):
    x = np.asarray(trace, dtype=float)
    if x.ndim != 1:
        raise ParameterError(f"trace must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("trace contains non-finite values")
    return x


def _acf_full(x):
    n = x.shape[0]
    xc = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    return acov / acov[0]


def autocorrelation(trace, max_lag: int) -> np.ndarray:
    """Biased ACF estimate for lags ``0..max_lag``; ``acf[0] == 1``."""
    x = _as_trace(trace)
    if max_lag < 0:
        raise ParameterError(f"max_lag must be nonnegative, got {max_lag}")
    if x.shape[0] <= 2 * max_lag:
        raise ParameterError(f"trace of length {x.shape[0]} is too short for max_lag={max_lag}")
    if np.ptp(x) == 0:
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    acf = _acf_full(x)[: max_lag + 1]
    acf[0] = 1.0
    return acf


def _ess(x):
    n = x.shape[0]
    if np.ptp(x) == 0:
        return None
    rho = _acf_full(x)
    # Geyer's initial positive sequence with monotone adjustment
    tau = -1.0
    prev = np.inf
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
    # strongly antithetic or very short traces can push tau below 1
    return n / max(tau, 1.0)


def effective_sample_size(trace) -> float:
    """Initial-positive-sequence ESS, capped at the trace length.

    A constant trace carries no usable variance information; it triggers
    :class:`DegenerateTraceWarning` and reports an ESS of 1.
    """
    x = _as_trace(trace)
    if x.shape[0] < 4:
        raise ParameterError(f"need at least 4 draws, got {x.shape[0]}")
    ess = _ess(x)
    if ess is None:
        warnings.warn("constant trace: effective sample size is undefined", DegenerateTraceWarning, stacklevel=2)
        return 1.0
    return float(min(ess, x.shape[0]))


@dataclass
class TraceSummary:
    mean: float
    variance: float
    acf: np.ndarray
    ess: float
    n: int
    degenerate: bool = False

    @property
    def mcse(self) -> float:
        """Monte Carlo standard error of the mean."""
        return float(np.sqrt(self.variance / self.ess))

    def as_record(self) -> dict:
        return {
            "mean": float(self.mean),
            "variance": float(self.variance),
            "ess": float(self.ess),
            "mcse": self.mcse,
            "n": int(self.n),
            "acf": [float(v) for v in self.acf],
            "degenerate": bool(self.degenerate),
        }


def summarize_trace(trace, max_lag: int = 20) -> TraceSummary:
    x = _as_trace(trace)
    max_lag = min(max_lag, (x.shape[0] - 1) // 2)
    acf = autocorrelation(x, max_lag)
    degenerate = bool(np.ptp(x) == 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTraceWarning)
        ess = effective_sample_size(x)
    return TraceSummary(float(x.mean()), float(x.var(ddof=1)), acf, ess, x.shape[0], degenerate)


def ess_difference_bootstrap(trace_a, trace_b, n_batches: int = 20, n_boot: int = 2000, rng=None):
    """ESS(a) - ESS(b) and a bootstrap standard error for it.

    Each trace is cut into ``n_batches`` contiguous batches; per-batch
    ESS rates are resampled with replacement and scaled to the full
    length. Batches, not single draws, are resampled so the serial
    dependence inside a batch is kept.
    """
    a, b = _as_trace(trace_a), _as_trace(trace_b)
    if rng is None:
        rng = np.random.default_rng(0)
    diff = effective_sample_size(a) - effective_sample_size(b)

    def rates(x):
        chunks = np.array_split(x, n_batches)
        return np.array([effective_sample_size(c) / c.shape[0] for c in chunks])

    ra, rb = rates(a), rates(b)
    idx_a = rng.integers(0, n_batches, size=(n_boot, n_batches))
    idx_b = rng.integers(0, n_batches, size=(n_boot, n_batches))
    boot = ra[idx_a].mean(axis=1) * a.shape[0] - rb[idx_b].mean(axis=1) * b.shape[0]
    return float(diff), float(boot.std(ddof=1))
