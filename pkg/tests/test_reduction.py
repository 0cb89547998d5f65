import unittest

import numpy as np

from mixred.errors import DimMismatchError, RankDeficientSamplingError, ThresholdOutOfRangeError
from mixred.gaussian_core import GaussianFamily, Mixture, mixture_eval
from mixred.reduction import (
    MIN_THRESHOLD,
    cholesky_reduce,
    frequency_reduce_1d,
    mgs_reduce,
    pivoted_cholesky,
    reduce_mixture,
    theorem_bound,
    threshold_for_accuracy,
)
from mixred.rng import make_rng


def smooth_mixture(n: int, seed: int) -> Mixture:
    rng = make_rng(seed)
    return Mixture.diagonal(
        rng.uniform(-1.0, 1.0, n), rng.uniform(-2.0, 2.0, (n, 1)), rng.uniform(0.5, 1.0, (n, 1))
    )


def l2_distance(a: Mixture, b: Mixture) -> float:
    return Mixture.concat([a, b.scaled(-1.0)]).norm_l2()


class TestPivotedCholesky(unittest.TestCase):
    def setUp(self) -> None:
        self.m = smooth_mixture(60, 1)
        self.family = GaussianFamily(self.m)

    def test_pivots_are_a_permutation(self) -> None:
        partial = pivoted_cholesky(self.family, 1e-8)
        np.testing.assert_array_equal(np.sort(partial.pivots), np.arange(self.m.size))
        self.assertEqual(partial.skeleton.size + partial.removed.size, self.m.size)

    def test_pivot_values_decrease(self) -> None:
        partial = pivoted_cholesky(self.family, 1e-10)
        self.assertTrue(np.all(np.diff(partial.pivot_values) <= 1e-12))
        self.assertGreaterEqual(partial.final_pivot, 1e-10)

    def test_factor_reproduces_skeleton_gram(self) -> None:
        partial = pivoted_cholesky(self.family, 1e-8)
        skeleton = partial.skeleton
        gram = np.stack([self.family.column(j) for j in skeleton], axis=1)
        factor = partial.columns
        np.testing.assert_allclose(factor @ factor[skeleton].T, gram, atol=1e-8)

    def test_forced_pivot_comes_first(self) -> None:
        partial = pivoted_cholesky(self.family, 1e-8, forced=[17])
        self.assertEqual(int(partial.pivots[0]), 17)

    def test_first_pool_is_exhausted_before_the_rest(self) -> None:
        pool = [3, 4, 5]
        partial = pivoted_cholesky(self.family, 1e-8, first_pool=pool)
        self.assertEqual(set(partial.pivots[:3].tolist()), set(pool))

    def test_max_rank_limits_the_skeleton(self) -> None:
        partial = pivoted_cholesky(self.family, MIN_THRESHOLD, max_rank=4)
        self.assertEqual(partial.rank, 4)


class TestReduction(unittest.TestCase):
    def setUp(self) -> None:
        self.m = smooth_mixture(200, 2)
        self.family = GaussianFamily(self.m)

    def test_cholesky_error_within_bound(self) -> None:
        result = cholesky_reduce(self.family, self.m.coeffs, 1e-8)
        self.assertLess(result.rank, self.m.size)
        assert result.bound is not None
        self.assertLessEqual(l2_distance(self.m, result.apply(self.m)), result.bound)

    def test_mgs_error_within_bound(self) -> None:
        result = mgs_reduce(self.family, self.m.coeffs, 1e-4)
        assert result.bound is not None
        self.assertLessEqual(l2_distance(self.m, result.apply(self.m)), result.bound)

    def test_cholesky_and_mgs_agree(self) -> None:
        chol = reduce_mixture(self.m, 1e-3, "cholesky")
        mgs = reduce_mixture(self.m, 1e-3, "mgs")
        np.testing.assert_array_equal(np.sort(chol.skeleton), np.sort(mgs.skeleton))
        x = np.linspace(-5.0, 5.0, 101).reshape(-1, 1)
        np.testing.assert_allclose(
            mixture_eval(chol.apply(self.m), x), mixture_eval(mgs.apply(self.m), x), atol=1e-8
        )

    def test_identical_atoms_collapse_to_one(self) -> None:
        m = Mixture.isotropic([0.5, 1.0, 1.5, 2.0], np.zeros((4, 2)), 0.3)
        result = cholesky_reduce(GaussianFamily(m), m.coeffs, 1e-10)
        self.assertEqual(result.rank, 1)
        self.assertAlmostEqual(float(result.coeffs[0]), 5.0, places=12)

    def test_threshold_out_of_range_raises(self) -> None:
        for eps in (1.0, 1e-16):
            with self.assertRaises(ThresholdOutOfRangeError):
                cholesky_reduce(self.family, self.m.coeffs, eps)

    def test_coefficient_length_mismatch_raises(self) -> None:
        with self.assertRaises(DimMismatchError):
            cholesky_reduce(self.family, np.ones(3), 1e-8)

    def test_unknown_algorithm_raises(self) -> None:
        with self.assertRaises(ValueError):
            reduce_mixture(self.m, 1e-3, "qr")

    def test_frequency_reduction_reproduces_the_mixture(self) -> None:
        result = reduce_mixture(self.m, 1e-10, "frequency", samples=100)
        self.assertLess(result.rank, self.m.size)
        self.assertIsNone(result.bound)
        x = np.linspace(-6.0, 6.0, 241).reshape(-1, 1)
        exact = np.asarray(mixture_eval(self.m, x))
        approx = np.asarray(mixture_eval(result.apply(self.m), x))
        self.assertLess(float(np.max(np.abs(exact - approx))), 1e-5 * float(np.max(np.abs(exact))))

    def test_frequency_reduction_reports_saturation(self) -> None:
        # 5 frequencies give 10 stacked rows; a negligible tolerance keeps all of them
        with self.assertRaises(RankDeficientSamplingError) as context:
            frequency_reduce_1d(self.m, 5, 1e-30, retry=False)
        self.assertEqual(context.exception.rank, 10)
        self.assertEqual(context.exception.suggested_samples, 10)

    def test_rank_above_sample_count_is_not_saturation(self) -> None:
        result = frequency_reduce_1d(self.m, 5, 1e-12, retry=False)
        self.assertGreaterEqual(result.rank, 5)
        self.assertLess(result.rank, 10)

    def test_frequency_reduction_needs_one_dimension(self) -> None:
        m = Mixture.isotropic([1.0, 1.0], [[0.0, 0.0], [1.0, 1.0]], 1.0)
        with self.assertRaises(DimMismatchError):
            frequency_reduce_1d(m, 50, 1e-10)

    def test_theorem_bound(self) -> None:
        self.assertAlmostEqual(theorem_bound([3.0, 4.0], 10, 6, 0.01), 1.0, places=14)
        with self.assertRaises(ValueError):
            theorem_bound([1.0], 2, 3, 0.01)

    def test_threshold_for_accuracy(self) -> None:
        self.assertAlmostEqual(threshold_for_accuracy(1e-7, "cholesky"), 1e-14, places=28)
        self.assertEqual(threshold_for_accuracy(1e-7, "mgs"), 1e-7)
        self.assertEqual(threshold_for_accuracy(1e-7, "frequency"), 1e-7)


if __name__ == '__main__':
    unittest.main()
