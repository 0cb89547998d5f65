import math
import unittest

import numpy as np

from mixred.errors import DimMismatchError, NotSPDError
from mixred.gaussian_core import (
    CovKind,
    GaussianFamily,
    Mixture,
    atom_convolve,
    atom_fourier,
    atom_inner,
    atom_product,
    make_atom,
    mixture_eval,
    mixture_fourier,
)
from mixred.numerical_oracles import adaptive_quad_1d
from mixred.rng import make_rng


class TestGaussianAtoms(unittest.TestCase):
    def setUp(self) -> None:
        self.a = make_atom([0.0], [[1.0]])
        self.b = make_atom([1.0], [[1.0]])

    def test_atoms_have_unit_norm(self) -> None:
        atom = make_atom([0.5, -1.0], [[2.0, 0.3], [0.3, 0.7]])
        self.assertAlmostEqual(atom_inner(atom, atom), 1.0, places=14)

    def test_inner_product_of_shifted_atoms(self) -> None:
        self.assertAlmostEqual(atom_inner(self.a, self.b), math.exp(-0.25), places=14)

    def test_atom_peak_value(self) -> None:
        atom = make_atom([2.0], [[0.25]])
        self.assertAlmostEqual(float(atom.evaluate([2.0])[0]), (math.pi * 0.25) ** -0.25, places=14)

    def test_atom_mass(self) -> None:
        self.assertAlmostEqual(self.a.mass(), math.pi ** -0.25 * math.sqrt(2.0 * math.pi), places=12)

    def test_detected_covariance_kind(self) -> None:
        self.assertEqual(make_atom([0.0, 0.0], np.eye(2)).kind, CovKind.ISO)
        self.assertEqual(make_atom([0.0, 0.0], np.diag([1.0, 2.0])).kind, CovKind.DIAG)
        self.assertEqual(make_atom([0.0, 0.0], [[1.0, 0.1], [0.1, 1.0]]).kind, CovKind.FULL)

    def test_product_matches_pointwise_product(self) -> None:
        amplitude, product = atom_product(self.a, make_atom([0.7], [[0.4]]))
        other = make_atom([0.7], [[0.4]])
        x = np.linspace(-3.0, 3.0, 13).reshape(-1, 1)
        np.testing.assert_allclose(amplitude * product.evaluate(x), self.a.evaluate(x) * other.evaluate(x),
                                   rtol=1e-12, atol=1e-300)

    def test_convolution_matches_quadrature(self) -> None:
        other = make_atom([0.5], [[0.3]])
        amplitude, conv = atom_convolve(self.a, other)
        for x in (-1.0, 0.2, 1.5):
            expected = adaptive_quad_1d(
                lambda y: float(self.a.evaluate([y])[0] * other.evaluate([x - y])[0]), -20.0, 20.0, 1e-10
            )
            self.assertAlmostEqual(amplitude * float(conv.evaluate([x])[0]), expected, places=8)

    def test_fourier_transform_of_centered_atom(self) -> None:
        self.assertAlmostEqual(atom_fourier(self.a, [1.3]).real, math.pi ** -0.25 * math.exp(-0.5 * 1.69), places=14)
        self.assertAlmostEqual(atom_fourier(self.a, [1.3]).imag, 0.0, places=14)

    def test_nonsymmetric_covariance_raises(self) -> None:
        with self.assertRaises(NotSPDError):
            make_atom([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])

    def test_indefinite_covariance_raises(self) -> None:
        with self.assertRaises(NotSPDError):
            make_atom([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])

    def test_dimension_mismatch_raises(self) -> None:
        with self.assertRaises(DimMismatchError):
            make_atom([0.0, 0.0], [[1.0]])
        with self.assertRaises(DimMismatchError):
            atom_inner(self.a, make_atom([0.0, 0.0], np.eye(2)))


class TestMixture(unittest.TestCase):
    def setUp(self) -> None:
        rng = make_rng(3)
        self.n = 12
        self.coeffs = rng.uniform(-1.0, 1.0, self.n)
        self.means = rng.uniform(-2.0, 2.0, (self.n, 2))
        self.variances = rng.uniform(0.2, 1.0, (self.n, 2))
        self.diag = Mixture.diagonal(self.coeffs, self.means, self.variances)

    def test_empty_mixture_raises(self) -> None:
        with self.assertRaises(ValueError):
            Mixture.isotropic([], np.zeros((0, 1)), [])

    def test_nonpositive_variance_raises(self) -> None:
        with self.assertRaises(NotSPDError):
            Mixture.isotropic([1.0, 1.0], [[0.0], [1.0]], [1.0, -1.0])

    def test_evaluation_is_independent_of_storage_kind(self) -> None:
        x = make_rng(4).uniform(-3.0, 3.0, (25, 2))
        full = self.diag.as_kind(CovKind.FULL)
        np.testing.assert_allclose(mixture_eval(full, x), mixture_eval(self.diag, x), rtol=1e-12, atol=1e-14)

    def test_evaluation_matches_atoms(self) -> None:
        x = np.array([[0.3, -0.4], [1.0, 1.0]])
        expected = sum(c * atom.evaluate(x) for c, atom in zip(self.coeffs, self.diag.atoms))
        np.testing.assert_allclose(mixture_eval(self.diag, x), expected, rtol=1e-12, atol=1e-14)

    def test_single_point_returns_float(self) -> None:
        value = mixture_eval(self.diag, [0.0, 0.0])
        self.assertIsInstance(value, float)

    def test_gram_columns_match_pairwise_inner_products(self) -> None:
        family = GaussianFamily(self.diag.as_kind(CovKind.FULL))
        atoms = self.diag.atoms
        column = family.column(5)
        for i in range(self.n):
            self.assertAlmostEqual(column[i], atom_inner(atoms[i], atoms[5]), places=12)

    def test_isotropic_gram_matches_full(self) -> None:
        iso = Mixture.isotropic(self.coeffs, self.means, self.variances[:, 0])
        fast = GaussianFamily(iso).column(2)
        slow = GaussianFamily(iso.as_kind(CovKind.FULL)).column(2)
        np.testing.assert_allclose(fast, slow, rtol=1e-12)

    def test_norm_of_scaled_atom(self) -> None:
        m = Mixture.isotropic([2.0], [[1.0, 2.0, 3.0]], [0.5])
        self.assertAlmostEqual(m.norm_l2(), 2.0, places=12)

    def test_merge_duplicates_sums_coefficients(self) -> None:
        m = Mixture.isotropic([1.0, 2.0, 0.5], [[0.0], [0.0], [1.0]], [1.0, 1.0, 1.0])
        merged = m.merge_duplicates()
        self.assertEqual(merged.size, 2)
        np.testing.assert_allclose(merged.coeffs, [3.0, 0.5])

    def test_concat_promotes_kind(self) -> None:
        iso = Mixture.isotropic([1.0], [[0.0, 0.0]], [1.0])
        joined = Mixture.concat([iso, self.diag])
        self.assertEqual(joined.kind, CovKind.DIAG)
        self.assertEqual(joined.size, self.n + 1)

    def test_concat_rejects_mixed_dimensions(self) -> None:
        with self.assertRaises(DimMismatchError):
            Mixture.concat([Mixture.isotropic([1.0], [[0.0]], [1.0]), self.diag])

    def test_mixture_fourier_matches_atom_fourier(self) -> None:
        xi = np.array([[0.4, -1.1]])
        expected = sum(c * atom_fourier(atom, xi[0]) for c, atom in zip(self.coeffs, self.diag.atoms))
        self.assertAlmostEqual(abs(complex(mixture_fourier(self.diag, xi)[0]) - expected), 0.0, places=12)

    def test_total_mass(self) -> None:
        m = Mixture.isotropic([1.0, -0.5], [[0.0], [3.0]], [1.0, 4.0])
        expected = sum(c * atom.mass() for c, atom in zip(m.coeffs, m.atoms))
        self.assertAlmostEqual(m.total_mass(), expected, places=12)


if __name__ == '__main__':
    unittest.main()
