"""Unit-L2 Gaussian atoms and mixtures with their closed-form algebra.

An atom is g(x) = det(pi Sigma)^(-1/4) exp(-(x - mu)^T Sigma^-1 (x - mu) / 2), so that
<g, g> = 1. Products and convolutions of atoms are again atoms up to an amplitude,
which is returned separately and folded into mixture coefficients by the caller.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist

from mixred.base import FloatArray, IndexArray, InnerProductFamily
from mixred.dense_linalg import spd_cholesky
from mixred.errors import DimMismatchError, NotSPDError


logger = logging.getLogger(__name__)

LOG_PI: float = math.log(math.pi)
LOG_2PI: float = math.log(2.0 * math.pi)
LOG_2: float = math.log(2.0)
SYMMETRY_RTOL: float = 1e-12
DUPLICATE_DIGITS: int = 12
EVAL_BLOCK: int = 1 << 22


class CovKind(str, Enum):
    FULL = "full"
    DIAG = "diag"
    ISO = "iso"


_KIND_RANK = {CovKind.ISO: 0, CovKind.DIAG: 1, CovKind.FULL: 2}


def log_normalizer(log_det: Union[float, FloatArray], dim: int) -> Union[float, FloatArray]:
    return -0.25 * (dim * LOG_PI + log_det)


@dataclass(frozen=True, eq=False)
class GaussianAtom:
    mean: FloatArray
    cov: FloatArray
    cov_chol: FloatArray = field(repr=False)
    log_norm: float
    kind: CovKind = CovKind.FULL

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.cov_chol))))

    def mass(self) -> float:
        """Integral of the atom over R^d."""
        return math.exp(self.log_norm + 0.5 * (self.dim * LOG_2PI + self.log_det))

    def evaluate(self, x: ArrayLike) -> FloatArray:
        points: FloatArray = _as_points(x, self.dim)
        z: FloatArray = sla.solve_triangular(self.cov_chol, (points - self.mean).T, lower=True)
        return np.exp(self.log_norm - 0.5 * np.sum(z * z, axis=0))


@dataclass(frozen=True, eq=False)
class IsotropicAtom:
    center: FloatArray
    scale: float

    def __post_init__(self) -> None:
        if not self.scale > 0.0:
            raise ValueError(f"isotropic scale must be positive, got {self.scale}")

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])

    def to_atom(self) -> GaussianAtom:
        return make_atom(self.center, self.scale**2 * np.eye(self.dim))


def _as_points(x: ArrayLike, dim: int) -> FloatArray:
    points: FloatArray = np.asarray(x, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(1, -1) if dim > 1 or points.shape[0] == 1 else points.reshape(-1, 1)
    if points.ndim != 2 or points.shape[1] != dim:
        raise DimMismatchError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return points


def _detect_kind(cov: FloatArray) -> CovKind:
    off_diagonal: FloatArray = cov - np.diag(np.diag(cov))
    if np.any(off_diagonal != 0.0):
        return CovKind.FULL
    diagonal: FloatArray = np.diag(cov)
    return CovKind.ISO if np.all(diagonal == diagonal[0]) else CovKind.DIAG


def make_atom(mu: ArrayLike, sigma: ArrayLike) -> GaussianAtom:
    mean: FloatArray = np.atleast_1d(np.asarray(mu, dtype=np.float64)).copy()
    cov: FloatArray = np.atleast_2d(np.asarray(sigma, dtype=np.float64)).copy()
    d: int = mean.shape[0]
    if mean.ndim != 1 or cov.shape != (d, d):
        raise DimMismatchError(f"mean of length {d} does not match covariance of shape {cov.shape}")
    scale: float = float(np.max(np.abs(cov))) if cov.size else 0.0
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
        raise NotSPDError(-1, "covariance is not symmetric")
    cov = 0.5 * (cov + cov.T)
    chol: FloatArray = spd_cholesky(cov)
    log_det: float = float(2.0 * np.sum(np.log(np.diag(chol))))
    return GaussianAtom(
        mean=mean, cov=cov, cov_chol=chol, log_norm=float(log_normalizer(log_det, d)), kind=_detect_kind(cov)
    )


def _check_pair(a: GaussianAtom, b: GaussianAtom) -> None:
    if a.dim != b.dim:
        raise DimMismatchError(f"atoms have dimensions {a.dim} and {b.dim}")


def _sum_factor(a: GaussianAtom, b: GaussianAtom) -> Tuple[FloatArray, float]:
    chol: FloatArray = spd_cholesky(a.cov + b.cov)
    return chol, float(2.0 * np.sum(np.log(np.diag(chol))))


def atom_inner(a: GaussianAtom, b: GaussianAtom) -> float:
    _check_pair(a, b)
    chol, log_det_sum = _sum_factor(a, b)
    z: FloatArray = sla.solve_triangular(chol, a.mean - b.mean, lower=True)
    log_value: float = (
        0.5 * a.dim * LOG_2 + 0.25 * (a.log_det + b.log_det) - 0.5 * log_det_sum - 0.5 * float(z @ z)
    )
    return min(math.exp(log_value), 1.0)


def atom_product(a: GaussianAtom, b: GaussianAtom) -> Tuple[float, GaussianAtom]:
    """Returns (amplitude, atom) with a(x) * b(x) == amplitude * atom(x)."""
    _check_pair(a, b)
    chol, _ = _sum_factor(a, b)
    cov: FloatArray = a.cov @ sla.cho_solve((chol, True), b.cov)
    mean: FloatArray = b.cov @ sla.cho_solve((chol, True), a.mean) + a.cov @ sla.cho_solve((chol, True), b.mean)
    result: GaussianAtom = make_atom(mean, 0.5 * (cov + cov.T))
    z: FloatArray = sla.solve_triangular(chol, a.mean - b.mean, lower=True)
    log_amplitude: float = a.log_norm + b.log_norm - result.log_norm - 0.5 * float(z @ z)
    return math.exp(log_amplitude), result


def atom_convolve(a: GaussianAtom, b: GaussianAtom) -> Tuple[float, GaussianAtom]:
    """Returns (amplitude, atom) with (a * b)(x) == amplitude * atom(x)."""
    _check_pair(a, b)
    result: GaussianAtom = make_atom(a.mean + b.mean, a.cov + b.cov)
    d: int = a.dim
    log_amplitude: float = (
        a.log_norm + b.log_norm - result.log_norm
        + 0.5 * (d * LOG_2PI + a.log_det + b.log_det - result.log_det)
    )
    return math.exp(log_amplitude), result


def atom_fourier(a: GaussianAtom, xi: ArrayLike) -> complex:
    """Unitary transform (2 pi)^(-d/2) * integral of g(x) exp(-i x.xi) dx."""
    frequency: FloatArray = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    if frequency.shape != (a.dim,):
        raise DimMismatchError(f"frequency of shape {frequency.shape} for a {a.dim}-dimensional atom")
    exponent: complex = complex(-0.5 * float(frequency @ a.cov @ frequency), -float(a.mean @ frequency))
    return complex(np.exp(a.log_norm + 0.5 * a.log_det + exponent))


def _significant(values: FloatArray, digits: int) -> FloatArray:
    magnitude: FloatArray = np.zeros_like(values)
    nonzero = values != 0.0
    magnitude[nonzero] = np.floor(np.log10(np.abs(values[nonzero])))
    scale: FloatArray = 10.0 ** (digits - 1 - magnitude)
    return np.round(values * scale) / scale


@dataclass(frozen=True, eq=False)
class Mixture:
    """u(x) = sum_l coeffs[l] * g_l(x) with all atoms stored in stacked arrays.

    `covs` has shape (N,) for isotropic variances, (N, d) for diagonal variances and
    (N, d, d) for full covariances.
    """

    coeffs: FloatArray
    means: FloatArray
    covs: FloatArray
    kind: CovKind = CovKind.FULL

    def __post_init__(self) -> None:
        n: int = self.coeffs.shape[0]
        if n == 0:
            raise ValueError("a mixture needs at least one atom")
        if self.means.ndim != 2 or self.means.shape[0] != n:
            raise DimMismatchError(f"{n} coefficients but means of shape {self.means.shape}")
        expected = {
            CovKind.ISO: (n,),
            CovKind.DIAG: (n, self.dim),
            CovKind.FULL: (n, self.dim, self.dim),
        }[self.kind]
        if self.covs.shape != expected:
            raise DimMismatchError(f"{self.kind.value} covariances must have shape {expected}, got {self.covs.shape}")

    @classmethod
    def isotropic(cls, coeffs: ArrayLike, centers: ArrayLike, variances: ArrayLike) -> "Mixture":
        centers_arr: FloatArray = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        variances_arr: FloatArray = np.broadcast_to(
            np.asarray(variances, dtype=np.float64), (centers_arr.shape[0],)
        ).copy()
        if np.any(variances_arr <= 0.0):
            raise NotSPDError(int(np.argmax(variances_arr <= 0.0)), "isotropic variance must be positive")
        return cls(np.asarray(coeffs, dtype=np.float64).copy(), centers_arr, variances_arr, CovKind.ISO)

    @classmethod
    def diagonal(cls, coeffs: ArrayLike, means: ArrayLike, variances: ArrayLike) -> "Mixture":
        means_arr: FloatArray = np.asarray(means, dtype=np.float64)
        if means_arr.ndim == 1:
            means_arr = means_arr.reshape(-1, 1)
        variances_arr: FloatArray = np.asarray(variances, dtype=np.float64).reshape(means_arr.shape).copy()
        if np.any(variances_arr <= 0.0):
            bad: int = int(np.argmax(np.any(variances_arr <= 0.0, axis=1)))
            raise NotSPDError(bad, f"diagonal variance of atom {bad} must be positive")
        return cls(np.asarray(coeffs, dtype=np.float64).copy(), means_arr.copy(), variances_arr, CovKind.DIAG)

    @classmethod
    def full(cls, coeffs: ArrayLike, means: ArrayLike, covs: ArrayLike) -> "Mixture":
        covs_arr: FloatArray = np.asarray(covs, dtype=np.float64)
        covs_arr = 0.5 * (covs_arr + np.swapaxes(covs_arr, -1, -2))
        mixture = cls(
            np.asarray(coeffs, dtype=np.float64).copy(), np.asarray(means, dtype=np.float64).copy(), covs_arr, CovKind.FULL
        )
        _ = mixture.log_dets
        return mixture

    @classmethod
    def from_atoms(cls, atoms: Sequence[GaussianAtom], coeffs: ArrayLike) -> "Mixture":
        if not atoms:
            raise ValueError("a mixture needs at least one atom")
        dims = {atom.dim for atom in atoms}
        if len(dims) != 1:
            raise DimMismatchError(f"atoms of mixed dimensions {sorted(dims)}")
        kind: CovKind = max((atom.kind for atom in atoms), key=lambda k: _KIND_RANK[k])
        means: FloatArray = np.stack([atom.mean for atom in atoms])
        coeff_arr: FloatArray = np.asarray(coeffs, dtype=np.float64)
        if kind is CovKind.ISO:
            return cls(coeff_arr.copy(), means, np.array([atom.cov[0, 0] for atom in atoms]), kind)
        if kind is CovKind.DIAG:
            return cls(coeff_arr.copy(), means, np.stack([np.diag(atom.cov) for atom in atoms]), kind)
        return cls(coeff_arr.copy(), means, np.stack([atom.cov for atom in atoms]), kind)

    @property
    def size(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def full_covs(self) -> FloatArray:
        n, d = self.size, self.dim
        if self.kind is CovKind.FULL:
            return self.covs
        if self.kind is CovKind.DIAG:
            out: FloatArray = np.zeros((n, d, d))
            out[:, np.arange(d), np.arange(d)] = self.covs
            return out
        return self.covs[:, None, None] * np.eye(d)

    def as_kind(self, kind: CovKind) -> "Mixture":
        if _KIND_RANK[kind] < _KIND_RANK[self.kind]:
            raise ValueError(f"cannot represent {self.kind.value} covariances as {kind.value}")
        if kind is self.kind:
            return self
        if kind is CovKind.FULL:
            return Mixture(self.coeffs, self.means, self.full_covs(), CovKind.FULL)
        return Mixture(self.coeffs, self.means, np.repeat(self.covs[:, None], self.dim, axis=1), CovKind.DIAG)

    @cached_property
    def chols(self) -> FloatArray:
        if self.kind is CovKind.FULL:
            try:
                return np.linalg.cholesky(self.covs)
            except np.linalg.LinAlgError:
                for index, cov in enumerate(self.covs):
                    try:
                        spd_cholesky(cov)
                    except NotSPDError as e:
                        raise NotSPDError(index, f"covariance of atom {index} is not positive definite") from e
                raise
        if self.kind is CovKind.DIAG:
            return self.full_covs() ** 0.5
        return np.sqrt(self.covs)[:, None, None] * np.eye(self.dim)

    @cached_property
    def inv_chols(self) -> FloatArray:
        return np.linalg.inv(self.chols)

    @cached_property
    def log_dets(self) -> FloatArray:
        if self.kind is CovKind.ISO:
            return self.dim * np.log(self.covs)
        if self.kind is CovKind.DIAG:
            return np.sum(np.log(self.covs), axis=1)
        return 2.0 * np.sum(np.log(np.diagonal(self.chols, axis1=1, axis2=2)), axis=1)

    @cached_property
    def log_norms(self) -> FloatArray:
        return np.asarray(log_normalizer(self.log_dets, self.dim))

    def atom(self, index: int) -> GaussianAtom:
        return make_atom(self.means[index], self._cov_matrix(index))

    def _cov_matrix(self, index: int) -> FloatArray:
        if self.kind is CovKind.FULL:
            return self.covs[index]
        if self.kind is CovKind.DIAG:
            return np.diag(self.covs[index])
        return self.covs[index] * np.eye(self.dim)

    @property
    def atoms(self) -> List[GaussianAtom]:
        return [self.atom(i) for i in range(self.size)]

    def subset(self, indices: ArrayLike, coeffs: Optional[ArrayLike] = None) -> "Mixture":
        idx: IndexArray = np.asarray(indices, dtype=np.intp)
        new_coeffs: FloatArray = self.coeffs[idx] if coeffs is None else np.asarray(coeffs, dtype=np.float64)
        return Mixture(new_coeffs.copy(), self.means[idx].copy(), self.covs[idx].copy(), self.kind)

    def scaled(self, factor: float) -> "Mixture":
        return Mixture(factor * self.coeffs, self.means, self.covs, self.kind)

    @staticmethod
    def concat(parts: Sequence["Mixture"]) -> "Mixture":
        if not parts:
            raise ValueError("nothing to concatenate")
        kind: CovKind = max((part.kind for part in parts), key=lambda k: _KIND_RANK[k])
        promoted = [part.as_kind(kind) for part in parts]
        if len({part.dim for part in promoted}) != 1:
            raise DimMismatchError("cannot concatenate mixtures of different dimensions")
        return Mixture(
            np.concatenate([p.coeffs for p in promoted]),
            np.concatenate([p.means for p in promoted]),
            np.concatenate([p.covs for p in promoted]),
            kind,
        )

    def masses(self) -> FloatArray:
        return np.exp(self.log_norms + 0.5 * (self.dim * LOG_2PI + self.log_dets))

    def total_mass(self) -> float:
        return float(self.coeffs @ self.masses())

    def norm_l2(self) -> float:
        family = GaussianFamily(self)
        gram: FloatArray = np.stack([family.column(j) for j in range(self.size)], axis=1)
        return math.sqrt(max(float(self.coeffs @ gram @ self.coeffs), 0.0))

    def merge_duplicates(self) -> "Mixture":
        """Sums coefficients of atoms whose parameters agree to twelve significant digits."""
        n: int = self.size
        params: FloatArray = np.concatenate([self.means, self.covs.reshape(n, -1)], axis=1)
        keys: FloatArray = _significant(params, DUPLICATE_DIGITS)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        order: IndexArray = np.argsort(first)
        rank_of_group: IndexArray = np.empty_like(order)
        rank_of_group[order] = np.arange(order.size)
        coeffs: FloatArray = np.bincount(rank_of_group[inverse], weights=self.coeffs, minlength=order.size)
        if order.size < n:
            logger.debug("merged %d duplicate atoms", n - order.size)
        return self.subset(first[order], coeffs)


def _pairwise_log_inner(mixture: Mixture, j: int, rows: slice) -> FloatArray:
    d: int = mixture.dim
    delta: FloatArray = mixture.means[rows] - mixture.means[j]
    if mixture.kind is CovKind.ISO:
        var_sum: FloatArray = mixture.covs[rows] + mixture.covs[j]
        quad: FloatArray = np.sum(delta * delta, axis=1) / var_sum
        log_det_sum: FloatArray = d * np.log(var_sum)
    elif mixture.kind is CovKind.DIAG:
        var_sums: FloatArray = mixture.covs[rows] + mixture.covs[j]
        quad = np.sum(delta * delta / var_sums, axis=1)
        log_det_sum = np.sum(np.log(var_sums), axis=1)
    else:
        cov_sum: FloatArray = mixture.covs[rows] + mixture.covs[j]
        chol: FloatArray = np.linalg.cholesky(cov_sum)
        log_det_sum = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        solved: FloatArray = np.linalg.solve(cov_sum, delta[:, :, None])[:, :, 0]
        quad = np.sum(delta * solved, axis=1)
    return np.asarray(
        0.5 * d * LOG_2 + 0.25 * (mixture.log_dets[rows] + mixture.log_dets[j]) - 0.5 * log_det_sum - 0.5 * quad
    )


class GaussianFamily(InnerProductFamily):
    """Gram columns of the atoms of a mixture, with isotropic and diagonal fast paths."""

    def __init__(self, mixture: Mixture, workers: int = 1) -> None:
        self.mixture: Mixture = mixture
        self.workers = workers

    @property
    def size(self) -> int:
        return self.mixture.size

    def _column_slice(self, j: int, rows: slice) -> FloatArray:
        return np.minimum(np.exp(_pairwise_log_inner(self.mixture, j, rows)), 1.0)


def _quad_forms(mixture: Mixture, atoms: slice, points: FloatArray) -> FloatArray:
    """(x - mu)^T Sigma^-1 (x - mu) for a block of atoms against all points, shape (atoms, points)."""
    if mixture.kind is CovKind.ISO:
        return cdist(mixture.means[atoms], points, "sqeuclidean") / mixture.covs[atoms][:, None]
    diff: FloatArray = points[None, :, :] - mixture.means[atoms][:, None, :]
    if mixture.kind is CovKind.DIAG:
        return np.sum(diff * diff / mixture.covs[atoms][:, None, :], axis=2)
    z: FloatArray = np.einsum("akj,anj->ank", mixture.inv_chols[atoms], diff)
    return np.sum(z * z, axis=2)


def atom_values(mixture: Mixture, points: FloatArray) -> FloatArray:
    """Matrix of atom values, shape (N, n_points)."""
    n, d = mixture.size, mixture.dim
    values: FloatArray = np.empty((n, points.shape[0]))
    block: int = max(1, EVAL_BLOCK // max(1, points.shape[0] * d))
    for start in range(0, n, block):
        atoms = slice(start, min(start + block, n))
        values[atoms] = np.exp(mixture.log_norms[atoms][:, None] - 0.5 * _quad_forms(mixture, atoms, points))
    return values


def mixture_eval(m: Mixture, x: ArrayLike) -> Union[float, FloatArray]:
    """Evaluates the mixture at one point (returns a float) or at the rows of an (n, d) array."""
    raw: FloatArray = np.asarray(x, dtype=np.float64)
    single: bool = raw.ndim == 1 and (m.dim > 1 or raw.shape[0] == 1)
    points: FloatArray = _as_points(raw, m.dim)
    result: FloatArray = np.empty(points.shape[0])
    block: int = max(1, EVAL_BLOCK // max(1, m.size * m.dim))
    for start in range(0, points.shape[0], block):
        chunk = slice(start, min(start + block, points.shape[0]))
        result[chunk] = m.coeffs @ atom_values(m, points[chunk])
    return float(result[0]) if single else result


def mixture_fourier(m: Mixture, xi: ArrayLike) -> NDArray[np.complex128]:
    """Unitary Fourier transform of the mixture at the rows of an (n, d) frequency array."""
    frequencies: FloatArray = _as_points(xi, m.dim)
    covs: FloatArray = m.full_covs()
    quad: FloatArray = np.einsum("nj,ajk,nk->an", frequencies, covs, frequencies)
    phase: FloatArray = m.means @ frequencies.T
    log_scale: FloatArray = (m.log_norms + 0.5 * m.log_dets)[:, None]
    transform: NDArray[np.complex128] = m.coeffs @ np.exp(log_scale - 0.5 * quad - 1j * phase)
    return transform
