import unittest

import numpy as np

from mixred.dense_linalg import (
    matrix_id,
    random_unitary,
    spd_cholesky,
    svd_lstsq_with_rank,
    sym_eigen,
    tri_solve,
)
from mixred.errors import DimMismatchError, NotSPDError, SingularDiagonalError
from mixred.rng import make_rng


class TestDenseLinalg(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = make_rng(11)
        self.spd = np.array([[4.0, 2.0, 0.4], [2.0, 3.0, 0.5], [0.4, 0.5, 1.0]])

    def test_cholesky_reconstructs_matrix(self) -> None:
        lower = spd_cholesky(self.spd)
        np.testing.assert_allclose(lower @ lower.T, self.spd, rtol=1e-14)
        self.assertTrue(np.allclose(np.triu(lower, 1), 0.0))

    def test_cholesky_reports_failing_pivot(self) -> None:
        with self.assertRaises(NotSPDError) as context:
            spd_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
        self.assertEqual(context.exception.pivot, 1)

    def test_cholesky_rejects_rectangular_input(self) -> None:
        with self.assertRaises(DimMismatchError):
            spd_cholesky(np.ones((2, 3)))

    def test_triangular_solves(self) -> None:
        lower = spd_cholesky(self.spd)
        b = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(lower @ tri_solve(lower, b), b, rtol=1e-13)
        np.testing.assert_allclose(lower.T @ tri_solve(lower, b, transpose=True), b, rtol=1e-13)

    def test_triangular_solve_rejects_zero_diagonal(self) -> None:
        lower = np.array([[1.0, 0.0], [1.0, 0.0]])
        with self.assertRaises(SingularDiagonalError) as context:
            tri_solve(lower, np.ones(2))
        self.assertEqual(context.exception.index, 1)

    def test_eigenvalues_descend(self) -> None:
        values, vectors = sym_eigen(self.spd)
        self.assertTrue(np.all(np.diff(values) <= 0.0))
        np.testing.assert_allclose(vectors @ np.diag(values) @ vectors.T, self.spd, atol=1e-13)

    def test_least_squares_truncates_rank(self) -> None:
        solution, rank = svd_lstsq_with_rank(np.ones((2, 2)), np.array([2.0, 2.0]), 1e-12)
        self.assertEqual(rank, 1)
        np.testing.assert_allclose(solution, [1.0, 1.0], rtol=1e-13)

    def test_least_squares_of_zero_matrix(self) -> None:
        solution, rank = svd_lstsq_with_rank(np.zeros((3, 2)), np.ones(3), 1e-12)
        self.assertEqual(rank, 0)
        np.testing.assert_array_equal(solution, np.zeros(2))

    def test_matrix_id_finds_column_rank(self) -> None:
        v, w = self.rng.standard_normal(6), self.rng.standard_normal(6)
        y = np.column_stack([v, 2.0 * v, w, v - w])
        result = matrix_id(y, 1e-12)
        self.assertEqual(result.rank, 2)
        np.testing.assert_allclose(y[:, result.skeleton] @ result.coeff_matrix, y, atol=1e-12)

    def test_matrix_id_rejects_nonpositive_tolerance(self) -> None:
        with self.assertRaises(ValueError):
            matrix_id(np.eye(3), 0.0)

    def test_random_unitary_is_orthogonal(self) -> None:
        q = random_unitary(5, self.rng)
        np.testing.assert_allclose(q.T @ q, np.eye(5), atol=1e-13)

    def test_random_unitary_rejects_empty_dimension(self) -> None:
        with self.assertRaises(ValueError):
            random_unitary(0, self.rng)


if __name__ == '__main__':
    unittest.main()
