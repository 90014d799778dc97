import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from dasandwich.bounds import (
    _quadratic_form_mp,
    appendix_b_terms,
    appendix_b_uniform_check,
    empirical_sup_check,
    quadratic_form,
    recursive_c_bound,
)
from dasandwich.distributions import RngStream
from dasandwich.exceptions import DegenerateInputError, ParameterError


@st.composite
def instances(draw, max_p=4, max_n=5):
    p = draw(st.integers(1, max_p))
    n = draw(st.integers(0, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    V = np.random.default_rng(seed).normal(size=(n + 1, p))
    return V[0], list(V[1:])


class TestRecursiveBound:
    def test_scalar(self):
        assert recursive_c_bound([2.0], [[3.0], [1.0]]) == 0.25

    def test_no_other_vectors(self):
        assert math.isclose(recursive_c_bound([3.0, 4.0]), 1 / 25)

    def test_zero_x1(self):
        assert recursive_c_bound([0.0, 0.0], [[1.0, 2.0]]) == 0.0

    def test_orthogonal_others_do_not_count(self):
        assert math.isclose(recursive_c_bound([0.0, 2.0], [[1.0, 0.0], [3.0, 0.0]]), 0.25)

    def test_tight_two_dimensional_case(self):
        # with a_1 -> 0 the form tends to exactly 2, the recursive value
        assert math.isclose(recursive_c_bound([1.0, 0.0], [[1.0, 1.0]]), 2.0)
        q = quadratic_form([1.0, 0.0], [[1.0, 1.0]], [1e-10, 1.0])
        assert abs(q - 2.0) < 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            recursive_c_bound([1.0, 0.0], [[1.0, 1.0, 1.0]])

    @settings(max_examples=60, deadline=None)
    @given(instances(), st.integers(0, 2**32 - 1))
    def test_rotation_invariant(self, inst, seed):
        x1, others = inst
        p = x1.shape[0]
        Q = special_ortho_group.rvs(p, random_state=seed) if p > 1 else np.array([[1.0]])
        a = recursive_c_bound(x1, others)
        b = recursive_c_bound(Q @ x1, [Q @ v for v in others])
        assert math.isclose(a, b, rel_tol=1e-7, abs_tol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(instances(), st.floats(0.01, 100.0), st.booleans())
    def test_invariant_to_rescaling_others(self, inst, c, flip):
        x1, others = inst
        c = -c if flip else c
        a = recursive_c_bound(x1, others)
        b = recursive_c_bound(x1, [c * v for v in others])
        assert math.isclose(a, b, rel_tol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(instances(max_p=3, max_n=4))
    def test_sampled_sup_below_bound(self, inst):
        x1, others = inst
        rep = empirical_sup_check(x1, others, 2_000, RngStream(1))
        assert rep.ok, rep


class TestQuadraticForm:
    def test_matches_direct_inverse(self):
        gen = np.random.default_rng(0)
        x1 = gen.normal(size=3)
        V = gen.normal(size=(4, 3))
        a = gen.uniform(0.1, 5.0, size=5)
        M = np.outer(x1, x1) + a[0] * np.eye(3) + sum(a[k + 1] * np.outer(V[k], V[k]) for k in range(4))
        w = np.linalg.solve(M, x1)
        assert math.isclose(quadratic_form(x1, V, a), w @ w, rel_tol=1e-12)
        assert math.isclose(_quadratic_form_mp(x1, V, a), w @ w, rel_tol=1e-12)

    def test_batched(self):
        x1 = np.array([1.0, 0.5])
        V = [np.array([0.3, 1.0])]
        A = np.array([[1.0, 2.0], [0.1, 0.1], [3.0, 1e-3]])
        q = quadratic_form(x1, V, A)
        assert q.shape == (3,)
        for row, val in zip(A, q):
            assert math.isclose(quadratic_form(x1, V, row), val, rel_tol=1e-14)

    def test_extreme_ratios_do_not_raise(self):
        x1 = np.array([-1.33664279, -1.36110671, -0.35161713])
        V = [np.array([-2.31258158, -0.1888972, -0.95722923])]
        q = quadratic_form(x1, V, np.array([[1e-8, 1e8]]))
        assert np.all(np.isfinite(q))


class TestUniformBound:
    def test_per_observation_identity(self):
        gen = np.random.default_rng(2)
        X = gen.normal(size=(6, 2))
        y = 10.0 ** gen.uniform(-3, 3, size=6)
        lhs, rhs = appendix_b_terms(X, y)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-8)

    def test_uniform_bound_two_columns(self):
        gen = np.random.default_rng(3)
        X = gen.normal(size=(5, 2))
        z = gen.normal(size=5)
        rep = appendix_b_uniform_check(X, z, 2_000, RngStream(3))
        assert rep.ok and rep.empirical_sup > 0

    def test_rank_deficient(self):
        X = np.column_stack([np.ones(4), np.ones(4)])
        with pytest.raises(DegenerateInputError):
            appendix_b_uniform_check(X, np.ones(4), 10, RngStream(0))

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            appendix_b_uniform_check(np.ones((3, 1)), np.ones(2), 10, RngStream(0))


def test_zero_vector_report():
    rep = empirical_sup_check([0.0, 0.0], [[1.0, 0.0]], 100, RngStream(0))
    assert rep.recursive_bound == 0.0 and rep.ok
    assert rep.as_record()["ok"] is True
