"""Skeleton selection for linear combinations of unit-norm functions.

Three reductions share one result type: a pivoted Cholesky factorization of the Gram
matrix, modified Gram-Schmidt with the same greedy pivoting, and (for 1-D Gaussian
mixtures) a matrix ID of Fourier samples. The Gram-based ones only ever request the
Gram columns of the pivots they select.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from mixred.base import FloatArray, IndexArray, InnerProductFamily
from mixred.dense_linalg import matrix_id, tri_solve
from mixred.errors import (
    DimMismatchError,
    NormUnderflowError,
    NumericalBreakdownError,
    RankDeficientSamplingError,
    ThresholdOutOfRangeError,
)
from mixred.gaussian_core import GaussianFamily, Mixture


logger = logging.getLogger(__name__)

MIN_THRESHOLD: float = 1e-14
NEGATIVE_DOWNDATE_LIMIT: float = -1e-8
INITIAL_CAPACITY: int = 64
FREQUENCY_LOW: float = 1e-2
FREQUENCY_FLOOR: float = 1e-16
MIN_SAMPLES: int = 50

ALGORITHMS: List[str] = ["cholesky", "mgs", "frequency"]


@dataclass
class PartialCholesky:
    pivots: IndexArray
    columns: FloatArray
    residuals: FloatArray
    rank: int
    pivot_values: FloatArray
    clamped: int = 0

    @property
    def skeleton(self) -> IndexArray:
        return self.pivots[: self.rank]

    @property
    def removed(self) -> IndexArray:
        return self.pivots[self.rank:]

    @property
    def final_pivot(self) -> float:
        return float(self.pivot_values[-1]) if self.rank else math.nan


@dataclass
class MgsState:
    pivots: IndexArray
    r_coeffs: FloatArray
    s_coeffs: FloatArray
    residual_norms: FloatArray
    rank: int
    clamped: int = 0


@dataclass
class FrequencySampling:
    xi_low: float
    xi_high: float
    frequencies: FloatArray
    samples: np.ndarray

    @property
    def count(self) -> int:
        return int(self.frequencies.shape[0])


@dataclass
class ReductionResult:
    skeleton: IndexArray
    removed: IndexArray
    coeffs: FloatArray
    eps: float
    bound: Optional[float]
    algorithm: str
    pivot_values: Optional[FloatArray] = None

    @property
    def rank(self) -> int:
        return int(self.skeleton.shape[0])

    def apply(self, mixture: Mixture) -> Mixture:
        return mixture.subset(self.skeleton, self.coeffs)


def theorem_bound(c: ArrayLike, n: int, r: int, eps: float) -> float:
    """||c||_2 * sqrt(N - r) * sqrt(eps): a-posteriori L2 bound for a Cholesky reduction."""
    if r > n:
        raise ValueError(f"rank {r} exceeds the number of terms {n}")
    return float(np.linalg.norm(np.asarray(c, dtype=np.float64)) * math.sqrt(n - r) * math.sqrt(eps))


def threshold_for_accuracy(accuracy: float, algorithm: str) -> float:
    """Pivot threshold giving a requested accuracy: the squared accuracy for Cholesky pivots, the
    accuracy itself for Gram-Schmidt norms and matrix-ID tolerances."""
    return accuracy * accuracy if algorithm == "cholesky" else accuracy


def _check_threshold(eps: float) -> None:
    if not MIN_THRESHOLD <= eps < 1.0:
        raise ThresholdOutOfRangeError(f"pivot threshold {eps} outside [{MIN_THRESHOLD}, 1)")


def _check_coeffs(family: InnerProductFamily, c: ArrayLike) -> FloatArray:
    coeffs: FloatArray = np.asarray(c, dtype=np.float64)
    if coeffs.shape != (family.size,):
        raise DimMismatchError(f"{coeffs.shape[0]} coefficients for a family of {family.size} elements")
    return coeffs


def _clamp(residual: FloatArray, selected: np.ndarray) -> int:
    negative: np.ndarray = (residual < 0.0) & ~selected
    if not np.any(negative):
        return 0
    worst: float = float(np.min(residual[negative]))
    if worst < NEGATIVE_DOWNDATE_LIMIT:
        raise NormUnderflowError(f"residual diagonal fell to {worst:.3e}; the inner products are not positive semidefinite")
    residual[negative] = 0.0
    return int(np.count_nonzero(negative))


def _grow(matrix: FloatArray, rows: bool, cols: bool) -> FloatArray:
    new_shape = (matrix.shape[0] * (2 if rows else 1), matrix.shape[1] * (2 if cols else 1))
    grown: FloatArray = np.zeros(new_shape)
    grown[: matrix.shape[0], : matrix.shape[1]] = matrix
    return grown


def pivoted_cholesky(
    family: InnerProductFamily,
    eps: float,
    first_pool: Optional[Sequence[int]] = None,
    forced: Optional[Sequence[int]] = None,
    max_rank: Optional[int] = None,
) -> PartialCholesky:
    """Greedy max-diagonal partial Cholesky of the Gram matrix.

    `forced` indices are pivoted first unconditionally. While `first_pool` is set, pivots
    are searched only inside it; once its largest residual drops below eps the search
    moves to all remaining indices.
    """
    n: int = family.size
    residual: FloatArray = family.diagonal().astype(np.float64).copy()
    selected: np.ndarray = np.zeros(n, dtype=bool)
    pool: Optional[np.ndarray] = None
    if first_pool is not None:
        pool = np.zeros(n, dtype=bool)
        pool[np.asarray(first_pool, dtype=np.intp)] = True
    queue: List[int] = list(forced or [])
    limit: int = n if max_rank is None else min(max_rank, n)
    columns: FloatArray = np.zeros((n, min(n, INITIAL_CAPACITY)))
    pivots: List[int] = []
    values: List[float] = []
    clamped: int = 0

    while len(pivots) < limit:
        step: int = len(pivots)
        if queue:
            p: int = queue.pop(0)
        else:
            available: FloatArray = np.where(selected, -np.inf, residual)
            if pool is not None:
                in_pool: FloatArray = np.where(pool, available, -np.inf)
                p = int(np.argmax(in_pool))
                if not in_pool[p] >= eps:
                    logger.debug("first pool exhausted after %d pivots", step)
                    pool = None
                    continue
            else:
                p = int(np.argmax(available))
                if not available[p] >= eps:
                    break
        value: float = float(residual[p])
        if not value > 0.0:
            raise NumericalBreakdownError(f"selected pivot {p} has nonpositive residual {value:.3e}")
        if step == columns.shape[1]:
            columns = _grow(columns, rows=False, cols=True)

        root: float = math.sqrt(value)
        column: FloatArray = family.column(p)
        if step:
            column = column - columns[:, :step] @ columns[p, :step]
        column /= root
        column[selected] = 0.0
        column[p] = root
        columns[:, step] = column
        selected[p] = True
        residual -= column * column
        residual[selected] = 0.0
        clamped += _clamp(residual, selected)
        pivots.append(p)
        values.append(value)
        logger.debug("pivot %d: index %d, residual %.3e", step, p, value)

    rank: int = len(pivots)
    rest: IndexArray = np.flatnonzero(~selected)
    return PartialCholesky(
        pivots=np.concatenate([np.asarray(pivots, dtype=np.intp), rest]).astype(np.intp),
        columns=columns[:, :rank].copy(),
        residuals=residual,
        rank=rank,
        pivot_values=np.asarray(values),
        clamped=clamped,
    )


def cholesky_reduce(
    family: InnerProductFamily,
    c: ArrayLike,
    eps: float,
    first_pool: Optional[Sequence[int]] = None,
) -> ReductionResult:
    _check_threshold(eps)
    coeffs: FloatArray = _check_coeffs(family, c)
    partial: PartialCholesky = pivoted_cholesky(family, eps, first_pool=first_pool)
    r: int = partial.rank
    skeleton, removed = partial.skeleton, partial.removed
    l_skeleton: FloatArray = partial.columns[skeleton]
    b: FloatArray = l_skeleton @ (partial.columns[removed].T @ coeffs[removed])
    new_coeffs: FloatArray = tri_solve(l_skeleton, tri_solve(l_skeleton, b), transpose=True) + coeffs[skeleton]
    bound: float = theorem_bound(coeffs, family.size, r, eps)
    if partial.clamped:
        logger.debug("clamped %d negative residual diagonals", partial.clamped)
    logger.info("cholesky reduction: %d -> %d terms (final pivot %.3e)", family.size, r, partial.final_pivot)
    return ReductionResult(skeleton, removed, new_coeffs, eps, bound, "cholesky", partial.pivot_values)


def mgs_factor(family: InnerProductFamily, eps: float) -> MgsState:
    """Modified Gram-Schmidt over the family with greedy largest-residual-norm pivoting.

    r_coeffs[i, k] is the projection of element i on the k-th orthonormal vector and
    s_coeffs[k, :k+1] expands that vector in the pivots selected so far.
    """
    n: int = family.size
    norms2: FloatArray = family.diagonal().astype(np.float64).copy()
    selected: np.ndarray = np.zeros(n, dtype=bool)
    capacity: int = min(n, INITIAL_CAPACITY)
    r_coeffs: FloatArray = np.zeros((n, capacity))
    s_coeffs: FloatArray = np.zeros((capacity, capacity))
    gram_columns: FloatArray = np.zeros((n, capacity))
    pivots: List[int] = []
    clamped: int = 0

    while len(pivots) < n:
        k: int = len(pivots)
        available: FloatArray = np.where(selected, -np.inf, norms2)
        p: int = int(np.argmax(available))
        if not math.sqrt(max(float(available[p]), 0.0)) >= eps:
            break
        if k == capacity:
            capacity *= 2
            r_coeffs = _grow(r_coeffs, rows=False, cols=True)
            gram_columns = _grow(gram_columns, rows=False, cols=True)
            s_coeffs = _grow(s_coeffs, rows=True, cols=True)
        r_kk: float = math.sqrt(float(norms2[p]))
        if not r_kk > 0.0:
            raise NumericalBreakdownError(f"selected pivot {p} has zero residual norm")

        s_row: FloatArray = np.zeros(k + 1)
        if k:
            s_row[:k] = -(r_coeffs[p, :k] @ s_coeffs[:k, :k]) / r_kk
        s_row[k] = 1.0 / r_kk
        s_coeffs[k, : k + 1] = s_row
        gram_columns[:, k] = family.column(p)

        projection: FloatArray = gram_columns[:, : k + 1] @ s_row
        projection[selected] = 0.0
        projection[p] = r_kk
        r_coeffs[:, k] = projection
        selected[p] = True
        norms2 -= projection * projection
        norms2[selected] = 0.0
        clamped += _clamp(norms2, selected)
        pivots.append(p)

    rank: int = len(pivots)
    rest: IndexArray = np.flatnonzero(~selected)
    return MgsState(
        pivots=np.concatenate([np.asarray(pivots, dtype=np.intp), rest]).astype(np.intp),
        r_coeffs=r_coeffs[:, :rank].copy(),
        s_coeffs=s_coeffs[:rank, :rank].copy(),
        residual_norms=np.sqrt(norms2),
        rank=rank,
        clamped=clamped,
    )


def mgs_reduce(family: InnerProductFamily, c: ArrayLike, eps: float) -> ReductionResult:
    _check_threshold(eps)
    coeffs: FloatArray = _check_coeffs(family, c)
    state: MgsState = mgs_factor(family, eps)
    r: int = state.rank
    skeleton: IndexArray = state.pivots[:r]
    removed: IndexArray = state.pivots[r:]
    new_coeffs: FloatArray = coeffs[skeleton] + state.s_coeffs.T @ (state.r_coeffs[removed].T @ coeffs[removed])
    # eps bounds norms here, so the Cholesky-style bound uses eps squared
    bound: float = theorem_bound(coeffs, family.size, r, eps * eps)
    logger.info("gram-schmidt reduction: %d -> %d terms", family.size, r)
    return ReductionResult(skeleton, removed, new_coeffs, eps, bound, "mgs")


def default_sample_count(r_guess: int) -> int:
    return max(2 * r_guess, MIN_SAMPLES)


def frequency_sampling(m: Mixture, r_p: int) -> FrequencySampling:
    if m.dim != 1:
        raise DimMismatchError(f"frequency sampling needs a 1-D mixture, got dimension {m.dim}")
    variances: FloatArray = m.full_covs()[:, 0, 0]
    sigma: float = float(np.sqrt(np.min(variances)))
    xi_high: float = math.sqrt(-2.0 * math.log(math.pi**0.25 * FREQUENCY_FLOOR / math.sqrt(sigma)) / sigma**2)
    frequencies: FloatArray = np.geomspace(FREQUENCY_LOW, xi_high, r_p)
    log_scale: FloatArray = m.log_norms + 0.5 * m.log_dets
    samples = np.exp(
        log_scale[None, :]
        - 0.5 * variances[None, :] * frequencies[:, None] ** 2
        - 1j * frequencies[:, None] * m.means[None, :, 0]
    )
    return FrequencySampling(FREQUENCY_LOW, xi_high, frequencies, samples)


def frequency_reduce_1d(m: Mixture, r_p: int, id_tol: float, retry: bool = True) -> ReductionResult:
    """Matrix ID of the Fourier samples of every atom; one automatic retry with doubled samples."""
    sampling: FrequencySampling = frequency_sampling(m, r_p)
    # Real and imaginary parts as separate rows keep the interpolation matrix real.
    stacked: FloatArray = np.vstack([sampling.samples.real, sampling.samples.imag])
    decomposition = matrix_id(stacked, id_tol)
    if decomposition.rank >= stacked.shape[0]:
        if retry:
            logger.info("frequency sampling saturated at %d samples, retrying with %d", r_p, 2 * r_p)
            return frequency_reduce_1d(m, 2 * r_p, id_tol, retry=False)
        raise RankDeficientSamplingError(r_p, decomposition.rank)
    skeleton: IndexArray = decomposition.skeleton
    removed: IndexArray = np.setdiff1d(np.arange(m.size), skeleton)
    new_coeffs: FloatArray = np.asarray(decomposition.coeff_matrix @ m.coeffs, dtype=np.float64)
    logger.info("frequency reduction: %d -> %d terms from %d samples", m.size, skeleton.size, r_p)
    return ReductionResult(skeleton, removed, new_coeffs, id_tol, None, "frequency")


def reduce_mixture(m: Mixture, accuracy: float, algorithm: str = "cholesky", workers: int = 1,
                   samples: Optional[int] = None) -> ReductionResult:
    """Reduces a Gaussian mixture to a requested accuracy with the named algorithm."""
    if algorithm == "frequency":
        r_p: int = samples if samples is not None else default_sample_count(m.size // 20)
        return frequency_reduce_1d(m, r_p, accuracy)
    family = GaussianFamily(m, workers=workers)
    eps: float = threshold_for_accuracy(accuracy, algorithm)
    if algorithm == "cholesky":
        return cholesky_reduce(family, m.coeffs, eps)
    if algorithm == "mgs":
        return mgs_reduce(family, m.coeffs, eps)
    raise ValueError(f"unknown reduction algorithm '{algorithm}', expected one of {ALGORITHMS}")
