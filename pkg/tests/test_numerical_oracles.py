import math
import unittest

import numpy as np
from scipy.special import kv

from mixred.base import gram_matrix
from mixred.gaussian_core import GaussianFamily, Mixture
from mixred.numerical_oracles import (
    adaptive_quad_1d,
    adaptive_quad_2d,
    ball_volume,
    bessel_i_half_scaled,
    bessel_i_scaled,
    bessel_k_half,
    cauchy_schwarz_violations,
    gauss_legendre,
    gaussian_potential_3d,
    gram_eigenvalues,
    mc_ball_integral,
    tensor_quad_2d,
)


class TestQuadrature(unittest.TestCase):
    def test_gauss_legendre_is_exact_for_polynomials(self) -> None:
        rule = gauss_legendre(5, 0.0, 1.0)
        self.assertAlmostEqual(rule.integrate(lambda x: x**4), 0.2, places=15)
        self.assertAlmostEqual(float(np.sum(rule.weights)), 1.0, places=15)

    def test_gauss_legendre_rejects_zero_order(self) -> None:
        with self.assertRaises(ValueError):
            gauss_legendre(0)

    def test_adaptive_gaussian_integral(self) -> None:
        value = adaptive_quad_1d(lambda x: math.exp(-x * x), -10.0, 10.0, 1e-10)
        self.assertAlmostEqual(value, math.sqrt(math.pi), places=9)

    def test_adaptive_2d_integral(self) -> None:
        value = adaptive_quad_2d(lambda x, y: x * y * y, (0.0, 1.0), (0.0, 2.0), 1e-10)
        self.assertAlmostEqual(value, 4.0 / 3.0, places=9)

    def test_tensor_rule_gaussian(self) -> None:
        value = tensor_quad_2d(lambda p: np.exp(-np.sum(p * p, axis=1)), (-8.0, -8.0), (8.0, 8.0), 64)
        self.assertAlmostEqual(value, math.pi, places=10)


class TestSpecialFunctions(unittest.TestCase):
    def setUp(self) -> None:
        self.z = np.array([1e-3, 0.5, 3.0, 40.0])

    def test_half_order_bessel_i(self) -> None:
        np.testing.assert_allclose(bessel_i_half_scaled(self.z), bessel_i_scaled(0.5, self.z), rtol=1e-12)

    def test_half_order_bessel_k(self) -> None:
        np.testing.assert_allclose(bessel_k_half(self.z), kv(0.5, self.z), rtol=1e-12)

    def test_gaussian_potential_far_away_is_a_point_charge(self) -> None:
        r = np.array([20.0])
        mass = (2.0 * math.pi) ** 1.5
        self.assertAlmostEqual(float(gaussian_potential_3d(r)[0]), mass / (4.0 * math.pi * 20.0), places=14)

    def test_gaussian_potential_at_small_radius(self) -> None:
        # erf(x) ~ 2x / sqrt(pi), so the potential tends to std^2
        self.assertAlmostEqual(float(gaussian_potential_3d(np.array([1e-8]))[0]), 1.0, places=8)

    def test_ball_volume(self) -> None:
        self.assertAlmostEqual(ball_volume(3, 2.0), 32.0 * math.pi / 3.0, places=12)
        self.assertAlmostEqual(ball_volume(2, 1.0), math.pi, places=14)


class TestMonteCarloAndGram(unittest.TestCase):
    def test_constant_over_ball(self) -> None:
        value, error = mc_ball_integral(lambda x: np.ones(x.shape[0]), np.zeros(3), 1.5, 1000, seed=5)
        self.assertAlmostEqual(value, ball_volume(3, 1.5), places=12)
        self.assertAlmostEqual(error, 0.0, places=12)

    def test_monte_carlo_samples_stay_in_ball(self) -> None:
        center = np.array([1.0, -2.0])
        value, _ = mc_ball_integral(
            lambda x: (np.linalg.norm(x - center, axis=1) <= 0.5 + 1e-12).astype(float), center, 0.5, 2000, seed=1
        )
        self.assertAlmostEqual(value, ball_volume(2, 0.5), places=12)

    def test_gram_eigenvalues_of_two_atoms(self) -> None:
        family = GaussianFamily(Mixture.isotropic([1.0, 1.0], [[0.0], [1.0]], 1.0))
        rho = math.exp(-0.25)
        np.testing.assert_allclose(gram_eigenvalues(family), [1.0 + rho, 1.0 - rho], rtol=1e-13)

    def test_gram_obeys_cauchy_schwarz(self) -> None:
        family = GaussianFamily(Mixture.isotropic(np.ones(5), np.arange(5.0).reshape(-1, 1), 0.7))
        self.assertEqual(cauchy_schwarz_violations(gram_matrix(family)), 0)

    def test_cauchy_schwarz_violations_are_counted(self) -> None:
        self.assertEqual(cauchy_schwarz_violations(np.array([[1.0, 2.0], [2.0, 1.0]])), 2)


if __name__ == '__main__':
    unittest.main()
