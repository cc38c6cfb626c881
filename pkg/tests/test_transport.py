from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import grad_check
from fdl import transport
from fdl.numerics import ShapeError, Tensor
from fdl.transport import (
    ProjectionBank,
    SampleSet,
    make_projections,
    sliced_wd,
    sorted_row_distance,
    stable_argsort_rows,
    wd1d,
    wd1d_oracle,
)

values = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def pair(n):
    return st.tuples(arrays(np.float64, n, elements=values), arrays(np.float64, n, elements=values))


class TestSampleSet:
    def test_vector_becomes_column(self):
        s = SampleSet(np.arange(3.0))
        assert (s.n, s.d) == (3, 1)

    @pytest.mark.parametrize("shape", [(0, 2), (3, 0), (2, 2, 2)])
    def test_rejects_bad_shapes(self, shape):
        with pytest.raises(ShapeError):
            SampleSet(np.zeros(shape))


class TestWd1d:
    @pytest.mark.parametrize(
        "a, b, expected", [([0.0], [5.0], 5.0), ([1.0, 3.0], [4.0, 2.0], 1.0), ([3.0, 1.0, 2.0], [1.0, 2.0, 3.0], 0.0)]
    )
    def test_examples(self, a, b, expected):
        assert wd1d(a, b).item() == expected

    def test_unequal_counts_rejected(self):
        with pytest.raises(ShapeError):
            wd1d([1.0, 2.0], [1.0])

    def test_needs_1d(self):
        with pytest.raises(ShapeError):
            wd1d(np.zeros((2, 2)), np.zeros((2, 2)))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6).flatmap(pair))
    def test_matches_oracle(self, ab):
        a, b = ab
        assert abs(wd1d(a, b).item() - wd1d_oracle(a, b)) <= 1e-12 * max(1.0, np.abs(a).max(), np.abs(b).max())

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 20).flatmap(pair))
    def test_symmetric_nonnegative(self, ab):
        a, b = ab
        d = wd1d(a, b).item()
        assert d >= 0
        assert d == wd1d(b, a).item()

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 10, elements=values), st.floats(-50, 50))
    def test_translation(self, a, c):
        c = float(np.float64(c))
        b = a + c
        # exact when the shifted values are exactly representable
        expected = np.mean(np.abs(np.sort(a) - np.sort(b)))
        assert wd1d(a, b).item() == expected
        assert abs(expected - abs(c)) <= 1e-12 * max(1.0, np.abs(a).max() + abs(c))

    def test_translation_exact_on_integers(self, rng):
        a = rng.integers(-50, 50, 10).astype(float)
        assert wd1d(a, a + 3.0).item() == 3.0

    def test_zero_iff_same_multiset(self, rng):
        a = rng.standard_normal(9)
        assert wd1d(a, rng.permutation(a)).item() == 0.0
        assert wd1d(a, a + np.eye(9)[0] * 1e-6).item() > 0

    def test_triangle(self, rng):
        for _ in range(50):
            a, b, c = rng.standard_normal((3, 7))
            assert wd1d(a, c).item() <= wd1d(a, b).item() + wd1d(b, c).item() + 1e-12

    def test_gradient(self, rng):
        b0 = rng.standard_normal(9)
        assert grad_check(lambda a: wd1d(a, Tensor(b0)), rng.standard_normal(9)) < 1e-6

    def test_oracle_limit(self):
        with pytest.raises(ValueError):
            wd1d_oracle(np.zeros(9), np.zeros(9))

    def test_oracle_example(self):
        assert wd1d_oracle([1.0, 3.0], [2.0, 4.0]) == 1.0


class TestStableSort:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 40), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_matches_numpy_stable(self, rows, cols, levels, seed):
        X = np.random.default_rng(seed).integers(0, levels, (rows, cols)).astype(float)
        order, vals = stable_argsort_rows(X)
        np.testing.assert_array_equal(order, np.argsort(X, axis=1, kind="stable"))
        np.testing.assert_array_equal(vals, np.sort(X, axis=1))

    def test_tie_gradient_follows_index_order(self):
        a = Tensor(np.array([[1.0, 1.0]]), requires_grad=True)
        b = Tensor(np.array([[0.0, 3.0]]))
        from fdl.numerics import backward, reduce_sum

        g = backward(reduce_sum(sorted_row_distance(a, b)), [a])[a]
        # a[0] is matched to 0 (sign +), a[1] to 3 (sign -)
        np.testing.assert_array_equal(g, [[0.5, -0.5]])


class TestProjections:
    def test_deterministic(self):
        assert np.array_equal(make_projections(16, 5, (1, 2, 3)).dirs, make_projections(16, 5, (1, 2, 3)).dirs)

    def test_different_seeds_differ(self):
        assert not np.array_equal(make_projections(4, 3, 0).dirs, make_projections(4, 3, 1).dirs)

    def test_unit_norm(self):
        bank = make_projections(1000, 7, 3)
        assert np.max(np.abs(np.linalg.norm(bank.dirs, axis=1) - 1)) <= 1e-12
        assert (bank.k, bank.d) == (1000, 7)

    def test_mean_direction_is_centered(self):
        bank = make_projections(200_000, 2, 11)
        assert abs(bank.dirs[:, 0].mean()) < 0.01

    def test_frozen(self):
        bank = make_projections(3, 2, 0)
        with pytest.raises(ValueError):
            bank.dirs[0, 0] = 1.0

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            ProjectionBank(np.array([[1.0, 1.0]]))

    @pytest.mark.parametrize("k, d", [(0, 2), (2, 0)])
    def test_rejects_empty(self, k, d):
        with pytest.raises(ValueError):
            make_projections(k, d, 0)


class TestSlicedWd:
    def test_identical_is_zero(self, rng):
        a = rng.standard_normal((20, 4))
        assert sliced_wd(a, a.copy(), make_projections(32, 4, 0)).item() == 0.0

    def test_identity_bank_is_wd1d(self, rng):
        a, b = rng.standard_normal((2, 15))
        assert sliced_wd(a, b, ProjectionBank.identity()).item() == wd1d(a, b).item()

    def test_1d_any_bank_is_wd1d(self, rng):
        a, b = rng.standard_normal((2, 15))
        assert sliced_wd(a, b, make_projections(8, 1, 0)).item() == wd1d(a, b).item()

    def test_monte_carlo_oracle(self):
        # E|<theta, v>| = (2 / pi) |v| for theta uniform on the circle
        value = sliced_wd(np.zeros((1, 2)), np.array([[3.0, 4.0]]), make_projections(100_000, 2, 5)).item()
        assert abs(value - 10 / np.pi) < 0.02

    def test_matches_explicit_average(self, rng):
        a, b = rng.standard_normal((2, 12, 3))
        bank = make_projections(10, 3, 1)
        ref = np.mean([wd1d(a @ t, b @ t).item() for t in bank.dirs])
        assert abs(sliced_wd(a, b, bank).item() - ref) < 1e-12

    def test_permutation_invariance(self, rng):
        a, b = rng.standard_normal((2, 30, 3))
        bank = make_projections(16, 3, 0)
        base = sliced_wd(a, b, bank).item()
        assert abs(sliced_wd(rng.permutation(a), rng.permutation(b), bank).item() - base) < 1e-12

    @pytest.mark.parametrize("a_shape, b_shape, bank_d", [((5, 2), (5, 3), 2), ((5, 2), (4, 2), 2), ((5, 2), (5, 2), 3)])
    def test_mismatch_rejected(self, a_shape, b_shape, bank_d):
        with pytest.raises(ShapeError):
            sliced_wd(np.zeros(a_shape), np.zeros(b_shape), make_projections(4, bank_d, 0))

    def test_gradient(self, rng):
        b0 = rng.standard_normal((10, 3))
        bank = make_projections(8, 3, 2)
        assert grad_check(lambda a: sliced_wd(a, Tensor(b0), bank), rng.standard_normal((10, 3))) < 1e-6

    @pytest.mark.parametrize("threads", [2, 3, 7])
    def test_threads_bit_identical(self, rng, threads):
        a, b = rng.standard_normal((2, 64, 5))
        bank = make_projections(50, 5, 0)
        base = sliced_wd(a, b, bank).item()
        transport.set_threads(threads)
        try:
            assert sliced_wd(a, b, bank).item() == base
        finally:
            transport.set_threads(1)

    def test_bad_thread_count(self):
        with pytest.raises(ValueError):
            transport.set_threads(0)
