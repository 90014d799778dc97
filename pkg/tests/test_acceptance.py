"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the pytest terminal summary)
before asserting, so a failing run still reports every criterion.
"""

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest
from scipy import integrate, stats

from dasandwich.bounds import appendix_b_uniform_check, empirical_sup_check
from dasandwich.diagnostics import ess_difference_bootstrap, summarize_trace
from dasandwich.distributions import GigParams, RngStream, sample_gig
from dasandwich.quantreg import quadrature_posterior_moments, reference_model, run_chain
from dasandwich.speclab import (
    GroupAction,
    JointTable,
    build_da_kernel,
    build_group_R,
    build_sandwich_kernel,
    chi_square_distance,
    chi_square_oracle,
    domination_report,
    eigenvalues_mean_zero,
    load_table,
    random_table,
    verify_lemma1,
)
from dasandwich.cli import _resolve


def _tables(n=100, seed=1):
    gen = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        nx, ny = gen.integers(2, 9, size=2)
        out.append(random_table(gen, int(nx), int(ny), concentration=float(gen.uniform(0.3, 3.0))))
    return out


TABLES = _tables()


def test_criterion_01_domination(criterion):
    t0 = time.perf_counter()
    worst_eig = worst_trace = -np.inf
    for t in TABLES:
        ny = t.shape[1]
        for action in (GroupAction.pair_swap(ny), GroupAction.cyclic(ny)):
            rep = domination_report(t, build_group_R(t.f_y, action))
            worst_eig = max(worst_eig, float(np.max(rep.lam_star - rep.lam)))
            worst_trace = max(worst_trace, rep.trace_Kstar - rep.trace_K)
    elapsed = time.perf_counter() - t0
    ok = worst_eig <= 1e-10 and worst_trace <= 1e-10 and elapsed < 5.0
    criterion(1, ok, f"max(lam*-lam)={worst_eig:.2e} max(trK*-trK)={worst_trace:.2e} {elapsed:.2f}s")
    assert ok


def test_criterion_02_singular_system(criterion):
    worst = max(verify_lemma1(t).max_residual for t in TABLES)
    lam1 = eigenvalues_mean_zero(build_da_kernel(load_table(_resolve("bundled:table_2x2.txt"))))[0]
    ok = worst < 1e-9 and abs(lam1 - 1.0 / 6.0) < 1e-12
    criterion(2, ok, f"max residual={worst:.2e} lambda_1-1/6={lam1 - 1 / 6:.1e}")
    assert ok


def _trace_gap(f, perms):
    t = JointTable(f)
    R = build_group_R(t.f_y, GroupAction(perms))
    K = build_da_kernel(t)
    Ks = build_sandwich_kernel(t, R)
    return float(np.trace(K.P) - np.trace(Ks.P))


def test_criterion_03_strictness(criterion):
    t0 = time.perf_counter()
    # swapping the two columns changes f(x | y): the trace must drop
    fails = np.array([[0.3, 0.2], [0.1, 0.4]])
    # columns 0 and 1 are proportional, so f(x | y) is shared across the swap
    holds = np.array([[0.10, 0.20, 0.15], [0.05, 0.10, 0.25], [0.05, 0.10, 0.00]])
    holds = holds / holds.sum()
    gap_fail = _trace_gap(fails, [[1, 0]])
    gap_hold = _trace_gap(holds, [[1, 0, 2]])
    elapsed = time.perf_counter() - t0
    ok = gap_fail > 1e-6 and abs(gap_hold) < 1e-10 and elapsed < 1.0
    criterion(3, ok, f"drop when violated={gap_fail:.3e} drop when shared={gap_hold:.1e} {elapsed:.3f}s")
    assert ok


def test_criterion_04_chi_square(criterion):
    gen = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        nx, ny = gen.integers(2, 7, size=2)
        t = random_table(gen, int(nx), int(ny))
        x0 = int(gen.integers(nx))
        for n in range(1, 21):
            worst = max(worst, abs(chi_square_distance(t, x0, n) - chi_square_oracle(t, x0, n)))
    t2 = load_table(_resolve("bundled:table_2x2.txt"))
    # both starting states have e_1(x0)^2 = 1 for the symmetric 2x2 kernel
    worst_2x2 = max(abs(chi_square_distance(t2, x0, n) - (1.0 / 6.0) ** (2 * n)) for x0 in (0, 1) for n in range(1, 21))
    ok = worst < 1e-8 and worst_2x2 < 1e-12
    criterion(4, ok, f"spectral vs power={worst:.2e} 2x2 vs (1/6)^2n={worst_2x2:.1e}")
    assert ok


def test_criterion_05_group_projection(criterion):
    gen = np.random.default_rng(5)
    worst_idem = worst_bal = worst_fix = 0.0
    wrongly_fixed = 0
    for _ in range(50):
        n = int(gen.integers(2, 9))
        f_y = gen.dirichlet(np.ones(n))
        for action in (GroupAction.pair_swap(n), GroupAction.cyclic(n), GroupAction.trivial(n)):
            R = build_group_R(f_y, action).P
            worst_idem = max(worst_idem, float(np.max(np.abs(R @ R - R))))
            worst_bal = max(worst_bal, float(np.max(np.abs(f_y[:, None] * R - (f_y[:, None] * R).T))))
            labels = action.orbit_labels()
            # orbit-constant functions are fixed
            h = gen.normal(size=labels.max() + 1)[labels]
            worst_fix = max(worst_fix, float(np.max(np.abs(R @ h - h))))
            # a function that is not orbit-constant is moved
            for _ in range(5):
                h = gen.normal(size=n)
                spread = max(np.ptp(h[labels == k]) for k in range(labels.max() + 1))
                if spread > 1e-3 and np.max(np.abs(R @ h - h)) < 1e-10:
                    wrongly_fixed += 1
    ok = worst_idem < 1e-10 and worst_bal < 1e-10 and worst_fix < 1e-10 and wrongly_fixed == 0
    criterion(5, ok, f"|R^2-R|={worst_idem:.1e} balance={worst_bal:.1e} fixed={worst_fix:.1e} non-invariant fixed={wrongly_fixed}")
    assert ok


N_DRAWS = 200_000


def _chain(kind):
    return run_chain(reference_model(), kind, n_iter=N_DRAWS, burn_in=2_000, seed=20240, stream_id=0)


@pytest.fixture(scope="module")
def reference_chains():
    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=2) as pool:
        da, sw = pool.map(_chain, ("da", "sandwich"))
    return {"da": da, "sandwich": sw, "elapsed": time.perf_counter() - t0}


def test_criterion_06_stationarity(criterion, reference_chains):
    t0 = time.perf_counter()
    mean, _ = quadrature_posterior_moments(reference_model())
    elapsed = reference_chains["elapsed"] + time.perf_counter() - t0
    parts, ok = [], elapsed < 60.0
    for kind in ("da", "sandwich"):
        s = summarize_trace(reference_chains[kind].beta[:, 0])
        # quadrature error is ~1e-8 relative, negligible next to the MCSE
        se = math.hypot(s.mcse, 1e-8 * abs(mean[0]))
        z = (s.mean - mean[0]) / se
        ok &= abs(z) < 3.0
        parts.append(f"{kind} z={z:+.2f}")
    criterion(6, ok, f"oracle={mean[0]:.6f} {' '.join(parts)} {elapsed:.1f}s")
    assert ok


def _gig_moments(p):
    lf = lambda x: p.logpdf_unnorm(x)  # noqa: E731
    grid = np.geomspace(1e-6, 1e4, 4001)
    peak = float(np.max(lf(grid)))
    mode = float(grid[np.argmax(lf(grid))])
    pts = [0.0, mode, 10 * mode + 10]

    def mom(k):
        f = lambda x: x**k * math.exp(lf(x) - peak) if x > 0 else 0.0  # noqa: E731
        return integrate.quad(f, pts[0], pts[1], limit=200)[0] + integrate.quad(f, pts[1], pts[2], limit=200)[0] + integrate.quad(f, pts[2], np.inf, limit=200)[0]

    m = [mom(k) for k in range(5)]
    mu = m[1] / m[0]
    raw = [m[k] / m[0] for k in range(5)]
    var = raw[2] - mu**2
    mu4 = raw[4] - 4 * mu * raw[3] + 6 * mu**2 * raw[2] - 3 * mu**4
    return mu, var, mu4


GIG_CASES = [
    (lam, a, b)
    for lam in (-0.5, 0.5, 1.0, 1.5)
    for a, b in ((2.0, 1.0), (1.0, 4.0), (0.2, 0.2), (5.0, 0.5))
]


def test_criterion_07_gig(criterion):
    n = 100_000
    worst_z = 0.0
    for k, (lam, a, b) in enumerate(GIG_CASES):
        p = GigParams(lam, a, b)
        rng = RngStream(7, k)
        x = np.array([sample_gig(rng, p, method="rejection") for _ in range(n)])
        mu, var, mu4 = _gig_moments(p)
        z_mean = (x.mean() - mu) / math.sqrt(var / n)
        z_var = (x.var(ddof=1) - var) / math.sqrt((mu4 - var**2) / n)
        worst_z = max(worst_z, abs(z_mean), abs(z_var))
    # lam = 1/2 shares its law with m - p = 1; lam = 3/2 with m - p = 3
    ks_min = 1.0
    for lam in (-0.5, 0.5):
        for j, (a, b) in enumerate(((2.0, 1.0), (1.0, 4.0))):
            p = GigParams(lam, a, b)
            r1, r2 = RngStream(70, j), RngStream(71, j)
            x = [sample_gig(r1, p, method="rejection") for _ in range(n)]
            y = [sample_gig(r2, p, method="auto") for _ in range(n)]
            ks_min = min(ks_min, stats.ks_2samp(x, y).pvalue)
    ok = worst_z < 3.0 and ks_min > 0.001
    criterion(7, ok, f"max |z| over {len(GIG_CASES)} cases={worst_z:.2f} min KS p={ks_min:.3f}")
    assert ok


def test_criterion_08_recursive_bound(criterion):
    gen = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst = np.inf
    for k in range(50):
        p = int(gen.integers(1, 5))
        n = int(gen.integers(1, 7))
        V = gen.normal(size=(n, p))
        # exercise the split: make one vector orthogonal to x1
        if p > 1 and n > 1 and gen.random() < 0.3:
            V[1] -= (V[1] @ V[0]) / (V[0] @ V[0]) * V[0]
        rep = empirical_sup_check(V[0], list(V[1:]), 100_000, RngStream(8, k))
        worst = min(worst, rep.margin)
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-9 and elapsed < 30.0
    criterion(8, ok, f"min(bound - sup)={worst:.3e} {elapsed:.1f}s")
    assert ok


def test_criterion_09_appendix_b(criterion):
    model = reference_model()
    rep = appendix_b_uniform_check(model.X, model.z, 100_000, RngStream(9))
    ok = rep.margin >= -1e-9
    criterion(9, ok, f"sup={rep.empirical_sup:.4f} bound={rep.recursive_bound:.4f}")
    assert ok


def test_criterion_10_ess_echo(criterion, reference_chains):
    da = reference_chains["da"].beta[:, 0]
    sw = reference_chains["sandwich"].beta[:, 0]
    diff, se = ess_difference_bootstrap(sw, da, rng=np.random.default_rng(10))
    ok = diff >= -3.0 * se
    criterion(10, ok, f"ESS(sandwich)-ESS(DA)={diff:.0f} bootstrap SE={se:.0f} (warning only)")
    if not ok:
        warnings.warn(f"sandwich ESS below DA ESS by more than 3 SE: diff={diff:.0f}, se={se:.0f}")
