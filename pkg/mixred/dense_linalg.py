import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray
from scipy.linalg import lapack

from mixred.base import FloatArray, IndexArray
from mixred.errors import DimMismatchError, NoConvergenceError, NotSPDError, SingularDiagonalError


logger = logging.getLogger(__name__)


@dataclass
class MatrixIdResult:
    skeleton: IndexArray
    coeff_matrix: NDArray[np.floating]
    residual_norm: float

    @property
    def rank(self) -> int:
        return int(self.skeleton.shape[0])


def _require_square(a: NDArray[np.floating]) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatchError(f"expected a square matrix, got shape {a.shape}")


def spd_cholesky(a: FloatArray) -> FloatArray:
    """Lower-triangular L with L @ L.T == a; raises NotSPDError naming the failing pivot."""
    matrix: FloatArray = np.asarray(a, dtype=np.float64)
    _require_square(matrix)
    factor, info = lapack.dpotrf(matrix, lower=1, clean=1)
    if info > 0:
        raise NotSPDError(int(info) - 1)
    if info < 0:
        raise ValueError(f"invalid argument {-int(info)} passed to the Cholesky factorization")
    return np.asarray(factor, dtype=np.float64)


def tri_solve(lower: FloatArray, b: NDArray[np.floating], transpose: bool = False) -> NDArray[np.floating]:
    """Solves L x = b, or L^T x = b when transpose is set."""
    _require_square(lower)
    if lower.shape[0] != b.shape[0]:
        raise DimMismatchError(f"right-hand side has {b.shape[0]} rows, factor has {lower.shape[0]}")
    zero_diagonal: IndexArray = np.flatnonzero(np.diag(lower) == 0.0)
    if zero_diagonal.size:
        raise SingularDiagonalError(int(zero_diagonal[0]))
    result: NDArray[np.floating] = sla.solve_triangular(
        lower, b, lower=True, trans="T" if transpose else "N", check_finite=False
    )
    return result


def sym_eigen(a: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (columns)."""
    matrix: FloatArray = np.asarray(a, dtype=np.float64)
    _require_square(matrix)
    try:
        values, vectors = sla.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise NoConvergenceError(f"symmetric eigensolver did not converge: {e}") from e
    return values[::-1].copy(), vectors[:, ::-1].copy()


def svd_lstsq_with_rank(a: FloatArray, b: FloatArray, rel_tol: float) -> Tuple[FloatArray, int]:
    try:
        u, s, vt = np.linalg.svd(np.asarray(a, dtype=np.float64), full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NoConvergenceError(f"SVD did not converge: {e}") from e
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.shape[1]), 0
    rank: int = int(np.count_nonzero(s > rel_tol * s[0]))
    projected: FloatArray = (u[:, :rank].T @ b) / s[:rank]
    solution: FloatArray = vt[:rank].T @ projected
    if rank < s.size:
        logger.info("least-squares system truncated to rank %d of %d", rank, s.size)
    return solution, rank


def svd_lstsq(a: FloatArray, b: FloatArray, rel_tol: float) -> FloatArray:
    """Minimum-norm least-squares solution ignoring singular values below rel_tol * sigma_max."""
    solution, _ = svd_lstsq_with_rank(a, b, rel_tol)
    return solution


def matrix_id(y: NDArray[np.floating], tol: float) -> MatrixIdResult:
    """Column interpolative decomposition Y ~= Y[:, skeleton] @ X from a column-pivoted QR.

    The rank is the smallest r with ||Y - Y[:, skeleton] X||_F <= tol * ||Y||_F; the
    Frobenius residual equals the norm of the trailing block of R.
    """
    if tol <= 0.0:
        raise ValueError(f"matrix ID tolerance must be positive, got {tol}")
    n_cols: int = y.shape[1]
    _, r, perm = sla.qr(y, mode="economic", pivoting=True)
    row_energy: FloatArray = np.sum(np.abs(r) ** 2, axis=1)
    tails: FloatArray = np.append(np.sqrt(np.cumsum(row_energy[::-1])[::-1]), 0.0)
    total: float = float(tails[0])
    rank: int = max(int(np.argmax(tails <= tol * total)), 1)

    x: NDArray[np.floating] = np.zeros((rank, n_cols), dtype=r.dtype)
    x[:, perm[:rank]] = np.eye(rank, dtype=r.dtype)
    if rank < n_cols:
        x[:, perm[rank:]] = sla.solve_triangular(r[:rank, :rank], r[:rank, rank:], check_finite=False)
    logger.debug("matrix ID of %s matrix: rank %d, residual %.3e", y.shape, rank, tails[rank])
    return MatrixIdResult(skeleton=perm[:rank].astype(np.intp), coeff_matrix=x, residual_norm=float(tails[rank]))


def random_unitary(d: int, rng: np.random.Generator) -> FloatArray:
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs: FloatArray = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return np.asarray(q * signs, dtype=np.float64)
