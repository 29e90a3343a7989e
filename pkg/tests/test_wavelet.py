"""Transform correctness: orthonormality, the dense reference, and counting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwds.rng import random_uniform
from cwds.wavelet import (
    WaveletPlan,
    count_above_threshold,
    forward_haar_2d,
    inverse_haar_2d,
    sparsity_ratio,
)

from oracles import haar_dense_matrix, haar_reference


def rand_image(n, seed):
    return random_uniform(n * n, seed) - 0.5


class TestPlan:
    def test_valid_328_with_3_levels(self):
        plan = WaveletPlan(n=328, levels=3)
        assert plan.num_coefficients == 328 * 328

    def test_side_not_divisible_rejected(self):
        with pytest.raises(ValueError):
            WaveletPlan(n=12, levels=3)

    def test_too_many_levels_rejected(self):
        with pytest.raises(ValueError):
            WaveletPlan(n=16, levels=5)

    def test_levels_must_be_positive(self):
        with pytest.raises(ValueError):
            WaveletPlan(n=8, levels=0)

    def test_subbands_partition_the_vector(self):
        plan = WaveletPlan(n=16, levels=2)
        table = plan.subbands()
        assert table[0][0] == "approx"
        covered = np.zeros(plan.num_coefficients, dtype=int)
        for _, _, offset, side in table:
            covered[offset : offset + side * side] += 1
        assert (covered == 1).all()
        # detail blocks run coarse to fine, hl/lh/hh within each level
        labels = [(label, level) for label, level, _, _ in table[1:]]
        assert labels == [("hl", 2), ("lh", 2), ("hh", 2), ("hl", 1), ("lh", 1), ("hh", 1)]


class TestForward:
    def test_all_ones_2x2_hits_only_the_approximation(self):
        plan = WaveletPlan(n=2, levels=1)
        coeffs = forward_haar_2d(np.ones(4), plan)
        assert coeffs[0] == pytest.approx(2.0, abs=1e-15)
        np.testing.assert_allclose(coeffs[1:], 0.0, atol=1e-15)

    def test_zero_image(self):
        plan = WaveletPlan(n=8, levels=2)
        np.testing.assert_array_equal(forward_haar_2d(np.zeros(64), plan), np.zeros(64))

    def test_parseval_64(self):
        plan = WaveletPlan(n=64, levels=3)
        f = rand_image(64, seed=11)
        w = forward_haar_2d(f, plan)
        assert abs(np.linalg.norm(w) - np.linalg.norm(f)) <= 1e-12 * np.linalg.norm(f)

    def test_accepts_square_input(self):
        plan = WaveletPlan(n=8, levels=1)
        f = rand_image(8, seed=3)
        np.testing.assert_array_equal(
            forward_haar_2d(f, plan), forward_haar_2d(f.reshape((8, 8), order="F"), plan)
        )

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            forward_haar_2d(np.zeros(63), WaveletPlan(n=8, levels=1))

    @pytest.mark.parametrize("n,levels", [(4, 1), (4, 2), (8, 3), (16, 2)])
    def test_matches_blockwise_reference(self, n, levels):
        plan = WaveletPlan(n=n, levels=levels)
        f = rand_image(n, seed=n + levels)
        np.testing.assert_allclose(
            forward_haar_2d(f, plan), haar_reference(f, plan), rtol=0, atol=1e-13
        )

    def test_dense_matrix_is_orthonormal(self):
        plan = WaveletPlan(n=8, levels=3)
        w = haar_dense_matrix(plan)
        np.testing.assert_allclose(w.T @ w, np.eye(64), atol=1e-12)

    def test_horizontal_edge_lands_in_the_row_difference_band(self):
        # top half 1, bottom half 0 along axis 0: pure "difference along rows"
        plan = WaveletPlan(n=4, levels=1)
        img = np.zeros((4, 4))
        img[0::2, :] = 1.0  # alternating rows -> finest-level HL content only
        coeffs = forward_haar_2d(img.ravel(order="F"), plan)
        table = {label: (off, side) for label, _, off, side in plan.subbands()}
        off, side = table["hl"]
        hl = coeffs[off : off + side * side]
        assert np.abs(hl).min() > 0.9
        for other in ("lh", "hh"):
            off, side = table[other]
            np.testing.assert_allclose(coeffs[off : off + side * side], 0.0, atol=1e-15)


class TestInverse:
    def test_round_trip_random_128(self):
        plan = WaveletPlan(n=128, levels=3)
        f = rand_image(128, seed=7)
        back = inverse_haar_2d(forward_haar_2d(f, plan), plan)
        assert np.linalg.norm(back - f) <= 1e-12 * np.linalg.norm(f)

    def test_unit_coefficient_synthesizes_a_unit_norm_basis_image(self):
        plan = WaveletPlan(n=8, levels=2)
        for slot in (0, 5, 40, 63):
            e = np.zeros(64)
            e[slot] = 1.0
            img = inverse_haar_2d(e, plan)
            assert np.linalg.norm(img) == pytest.approx(1.0, abs=1e-13)

    def test_zero_coefficients(self):
        plan = WaveletPlan(n=8, levels=1)
        np.testing.assert_array_equal(inverse_haar_2d(np.zeros(64), plan), np.zeros(64))

    @given(st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_property(self, seed):
        plan = WaveletPlan(n=16, levels=2)
        f = rand_image(16, seed)
        back = inverse_haar_2d(forward_haar_2d(f, plan), plan)
        assert np.max(np.abs(back - f)) < 1e-13


class TestLinearity:
    def test_transform_is_linear(self):
        plan = WaveletPlan(n=32, levels=2)
        f, g = rand_image(32, 1), rand_image(32, 2)
        lhs = forward_haar_2d(2.5 * f - 1.25 * g, plan)
        rhs = 2.5 * forward_haar_2d(f, plan) - 1.25 * forward_haar_2d(g, plan)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_inner_products_preserved(self):
        plan = WaveletPlan(n=16, levels=2)
        f, g = rand_image(16, 5), rand_image(16, 6)
        lhs = forward_haar_2d(f, plan) @ forward_haar_2d(g, plan)
        assert lhs == pytest.approx(f @ g, rel=1e-12)


class TestCounting:
    def test_strict_inequality(self):
        assert count_above_threshold(np.array([0.0, 2e-6, -5e-7]), 1e-6) == 1

    def test_boundary_value_not_counted(self):
        assert count_above_threshold(np.array([1e-6, -1e-6, 1.0000001e-6]), 1e-6) == 1

    def test_zero_vector(self):
        assert count_above_threshold(np.zeros(10), 0.0) == 0
        assert count_above_threshold(np.zeros(10), 1.0) == 0

    def test_zero_threshold_counts_every_nonzero(self):
        w = np.array([0.5, -0.25, 1e-300, 0.0])
        assert count_above_threshold(w, 0.0) == 3

    def test_monotone_in_kappa(self):
        w = random_uniform(500, seed=8) - 0.5
        counts = [count_above_threshold(w, k) for k in (0.0, 0.1, 0.2, 0.4, 1.0)]
        assert counts == sorted(counts, reverse=True)

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            count_above_threshold(np.ones(3), -1.0)


class TestSparsityRatio:
    def test_zero_image(self):
        plan = WaveletPlan(n=8, levels=1)
        assert sparsity_ratio(np.zeros(64), plan, 1e-6) == 0.0

    def test_range(self):
        plan = WaveletPlan(n=16, levels=2)
        r = sparsity_ratio(rand_image(16, 9), plan, 1e-6)
        assert 0.0 <= r <= 1.0

    def test_matches_count_over_n_squared(self):
        plan = WaveletPlan(n=8, levels=2)
        f = rand_image(8, 12)
        w = forward_haar_2d(f, plan)
        assert sparsity_ratio(f, plan, 0.3) == count_above_threshold(w, 0.3) / 64.0
