"""Free-space Poisson and variable-coefficient elliptic solvers on Gaussian mixtures.

Right-hand sides and kernel terms are Gaussians, so every convolution with a kernel
expansion is again a mixture. Solutions are compressed with the Cholesky reduction
and checked by residuals sampled along principal directions (Poisson) or at
frequency vectors (elliptic).
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixred.base import FloatArray, IndexArray
from mixred.dense_linalg import random_unitary, svd_lstsq_with_rank, sym_eigen
from mixred.errors import DimMismatchError, ExpansionKindMismatchError
from mixred.gaussian_core import (
    EVAL_BLOCK,
    LOG_2PI,
    CovKind,
    GaussianFamily,
    Mixture,
    log_normalizer,
    mixture_eval,
    mixture_fourier,
)
from mixred.radial_kernels import KernelExpansion, helmholtz_kernel_expansion
from mixred.reduction import ReductionResult, cholesky_reduce, pivoted_cholesky


logger = logging.getLogger(__name__)

SAMPLE_DECAY: float = 1e-10
COEFF_TRUNCATION: float = 1e-10
DEFAULT_SAMPLES: int = 10
U_PLUS_WARNING: float = 10.0
FREQUENCY_MIN: float = 1e-5


def convolve_with_kernel(f: Mixture, e: KernelExpansion, coeff_trunc: float = 0.0) -> Mixture:
    """G * f for G = sum_j w_j exp(-tau_j |x|^2): atom i and term j give an atom with
    covariance Sigma_i + I / (2 tau_j). Terms with |coefficient| < coeff_trunc are dropped;
    when nothing survives the result is a single atom with coefficient zero."""
    if e.dim != f.dim:
        raise DimMismatchError(f"expansion is for d={e.dim}, mixture has d={f.dim}")
    d: int = f.dim
    n_atoms, n_terms = f.size, e.n_terms
    spread: FloatArray = 0.5 / e.exponents
    if f.kind is CovKind.ISO:
        covs: FloatArray = (f.covs[:, None] + spread[None, :]).reshape(-1)
        log_dets: FloatArray = d * np.log(covs)
    elif f.kind is CovKind.DIAG:
        covs = (f.covs[:, None, :] + spread[None, :, None]).reshape(-1, d)
        log_dets = np.sum(np.log(covs), axis=1)
    else:
        covs = (f.covs[:, None, :, :] + spread[None, :, None, None] * np.eye(d)).reshape(-1, d, d)
        log_dets = np.linalg.slogdet(covs)[1]
    means: FloatArray = np.repeat(f.means, n_terms, axis=0)

    log_factor: FloatArray = (
        (f.log_norms + 0.5 * f.log_dets)[:, None]
        + (np.log(e.weights) - 0.5 * d * np.log(2.0 * e.exponents))[None, :]
        + 0.5 * d * LOG_2PI
    ).reshape(-1)
    log_factor = log_factor - 0.5 * log_dets - np.asarray(log_normalizer(log_dets, d))
    coeffs: FloatArray = np.repeat(f.coeffs, n_terms) * np.exp(log_factor)

    solution = Mixture(coeffs, means, covs, f.kind)
    if coeff_trunc <= 0.0:
        return solution
    kept: IndexArray = np.flatnonzero(np.abs(coeffs) >= coeff_trunc)
    logger.debug("convolution kept %d of %d terms", kept.size, n_atoms * n_terms)
    if kept.size == 0:
        return solution.subset([0], [0.0])
    return solution.subset(kept)


def _precisions(m: Mixture) -> FloatArray:
    full: Mixture = m.as_kind(CovKind.FULL)
    return np.einsum("aki,akj->aij", full.inv_chols, full.inv_chols)


def mixture_neg_laplacian(m: Mixture, points: FloatArray) -> FloatArray:
    """-Laplace(u) at points, from -Laplace(g) = (tr P - |P (x - mu)|^2) g with P = Sigma^-1."""
    n, d = m.size, m.dim
    result: FloatArray = np.zeros(points.shape[0])
    block: int = max(1, EVAL_BLOCK // max(1, points.shape[0] * d))
    if m.kind is CovKind.FULL:
        precisions: FloatArray = _precisions(m)
    for start in range(0, n, block):
        atoms = slice(start, min(start + block, n))
        diff: FloatArray = points[None, :, :] - m.means[atoms][:, None, :]
        if m.kind is CovKind.ISO:
            inv_var: FloatArray = 1.0 / m.covs[atoms]
            quad: FloatArray = np.sum(diff * diff, axis=2) * inv_var[:, None]
            trace: FloatArray = d * inv_var
            grad2: FloatArray = quad * inv_var[:, None]
        elif m.kind is CovKind.DIAG:
            inv_vars: FloatArray = 1.0 / m.covs[atoms]
            scaled: FloatArray = diff * inv_vars[:, None, :]
            quad = np.sum(diff * scaled, axis=2)
            trace = np.sum(inv_vars, axis=1)
            grad2 = np.sum(scaled * scaled, axis=2)
        else:
            scaled = np.einsum("ajk,ank->anj", precisions[atoms], diff)
            quad = np.sum(diff * scaled, axis=2)
            trace = np.trace(precisions[atoms], axis1=1, axis2=2)
            grad2 = np.sum(scaled * scaled, axis=2)
        values: FloatArray = np.exp(m.log_norms[atoms][:, None] - 0.5 * quad) * (trace[:, None] - grad2)
        result += m.coeffs[atoms] @ values
    return result


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Points mu_i + s v_j on equispaced s in [-s_j, s_j] along each eigenvector of each atom.

    Points are ordered atom-major, then direction, then position along the direction.
    """

    eigenvalues: FloatArray
    directions: FloatArray
    extents: FloatArray
    n_samples: int
    points: FloatArray
    atom_index: IndexArray
    direction_index: IndexArray
    offsets: FloatArray

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def principal_direction_samples(f: Mixture, n_samples: int = DEFAULT_SAMPLES) -> SampleGrid:
    if n_samples < 2:
        raise ValueError(f"need at least two samples per direction, got {n_samples}")
    n, d = f.size, f.dim
    covs: FloatArray = f.full_covs()
    eigenvalues: FloatArray = np.empty((n, d))
    directions: FloatArray = np.empty((n, d, d))
    for i in range(n):
        eigenvalues[i], directions[i] = sym_eigen(covs[i])
    extents: FloatArray = np.sqrt(-2.0 * np.clip(eigenvalues, 0.0, None) * math.log(SAMPLE_DECAY))
    unit: FloatArray = np.linspace(-1.0, 1.0, n_samples)
    offsets: FloatArray = extents[:, :, None] * unit[None, None, :]
    # points[i, j, k] = mu_i + offsets[i, j, k] * v_j^(i)
    points: FloatArray = f.means[:, None, None, :] + offsets[:, :, :, None] * np.swapaxes(directions, 1, 2)[:, :, None, :]
    return SampleGrid(
        eigenvalues=eigenvalues,
        directions=directions,
        extents=extents,
        n_samples=n_samples,
        points=points.reshape(-1, d),
        atom_index=np.repeat(np.arange(n), d * n_samples).astype(np.intp),
        direction_index=np.tile(np.repeat(np.arange(d), n_samples), n).astype(np.intp),
        offsets=offsets.reshape(-1),
    )


def residual_laplacian(u: Mixture, f: Mixture, pts: SampleGrid) -> FloatArray:
    """h(x) = -Laplace(u)(x) - f(x) at the grid points."""
    if u.dim != f.dim:
        raise DimMismatchError(f"solution has d={u.dim}, right-hand side has d={f.dim}")
    return mixture_neg_laplacian(u, pts.points) - np.asarray(mixture_eval(f, pts.points))


def _sup(values: FloatArray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0.0 else 0.0


@dataclass(frozen=True, eq=False)
class PoissonSolveReport:
    rhs: Mixture
    expansion: KernelExpansion
    solution_full: Mixture
    solution: Mixture
    reduction: ReductionResult
    grid: SampleGrid
    h_eps: FloatArray
    h_tilde: FloatArray
    h: FloatArray
    rhs_sup: float
    u_sup: float
    u_plus_ratio: float

    @property
    def n_total(self) -> int:
        return self.solution_full.size

    @property
    def n_reduced(self) -> int:
        return self.solution.size

    @property
    def h_eps_ratio(self) -> float:
        return _ratio(_sup(self.h_eps), self.rhs_sup)

    @property
    def h_tilde_ratio(self) -> float:
        return _ratio(_sup(self.h_tilde), self.rhs_sup)

    @property
    def h_ratio(self) -> float:
        return _ratio(_sup(self.h), self.u_sup)

    def summary(self) -> Dict[str, Any]:
        return {
            "d": self.rhs.dim,
            "n_rhs": self.rhs.size,
            "n_terms": self.expansion.n_terms,
            "n_total": self.n_total,
            "h_eps_ratio": self.h_eps_ratio,
            "n_reduced": self.n_reduced,
            "h_tilde_ratio": self.h_tilde_ratio,
            "h_ratio": self.h_ratio,
            "u_plus_ratio": self.u_plus_ratio,
        }

    def residual_rows(self) -> List[Tuple[int, int, float, float, float, float]]:
        return [
            (i, int(self.grid.direction_index[i]), float(self.grid.offsets[i]),
             float(self.h_eps[i]), float(self.h_tilde[i]), float(self.h[i]))
            for i in range(self.grid.size)
        ]


def poisson_solve(
    f: Mixture,
    e: KernelExpansion,
    coeff_trunc: float = COEFF_TRUNCATION,
    red_eps: float = 1e-12,
    n_samples: int = DEFAULT_SAMPLES,
    workers: int = 1,
) -> PoissonSolveReport:
    """Solves -Laplace(u) = f in free space with the Green's function expansion e."""
    if e.kind != "power":
        raise ExpansionKindMismatchError(f"Poisson solves need a power-kernel expansion, got '{e.kind}'")
    solution_full: Mixture = convolve_with_kernel(f, e, coeff_trunc)
    logger.info("poisson d=%d: %d rhs atoms x %d kernel terms -> %d after truncation",
                f.dim, f.size, e.n_terms, solution_full.size)
    reduction: ReductionResult = cholesky_reduce(GaussianFamily(solution_full, workers), solution_full.coeffs, red_eps)
    solution: Mixture = reduction.apply(solution_full)

    grid: SampleGrid = principal_direction_samples(f, n_samples)
    u_full: FloatArray = np.asarray(mixture_eval(solution_full, grid.points))
    u_reduced: FloatArray = np.asarray(mixture_eval(solution, grid.points))
    u_plus: FloatArray = np.asarray(
        mixture_eval(Mixture(np.abs(solution_full.coeffs), solution_full.means, solution_full.covs, solution_full.kind),
                     grid.points)
    )
    u_sup: float = _sup(u_full)
    u_plus_ratio: float = _ratio(_sup(u_plus), u_sup)
    if u_plus_ratio > U_PLUS_WARNING:
        logger.warning("u+ ratio %.3g exceeds %g; the pointwise error bound is loose for this right-hand side",
                       u_plus_ratio, U_PLUS_WARNING)
    return PoissonSolveReport(
        rhs=f,
        expansion=e,
        solution_full=solution_full,
        solution=solution,
        reduction=reduction,
        grid=grid,
        h_eps=residual_laplacian(solution_full, f, grid),
        h_tilde=residual_laplacian(solution, f, grid),
        h=u_full - u_reduced,
        rhs_sup=_sup(np.asarray(mixture_eval(f, grid.points))),
        u_sup=u_sup,
        u_plus_ratio=u_plus_ratio,
    )


def random_gaussian_rhs(d: int, n_terms: int, rng: np.random.Generator) -> Mixture:
    """Sum of exp(-(x - mu)^T Sigma^-1 (x - mu) / 2) with Sigma = U^T U + I/10 and standard
    normal U, means and (for more than one term) amplitudes. A single term has amplitude 1."""
    factors: FloatArray = rng.standard_normal((n_terms, d, d))
    covs: FloatArray = np.einsum("aki,akj->aij", factors, factors) + 0.1 * np.eye(d)
    means: FloatArray = rng.standard_normal((n_terms, d))
    amplitudes: FloatArray = rng.standard_normal(n_terms) if n_terms > 1 else np.ones(1)
    rhs: Mixture = Mixture.full(np.ones(n_terms), means, covs)
    return Mixture(amplitudes / np.exp(rhs.log_norms), rhs.means, rhs.covs, CovKind.FULL)


def _spectrum(d: int, low: float, high: float, rng: np.random.Generator) -> FloatArray:
    values: FloatArray = np.concatenate([[low, high], rng.uniform(low, high, max(d - 2, 0))])[:d]
    return rng.permutation(values)


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    """-div(a grad u) + k^2 u = f with a = 1 + amplitude * exp(-(x - mu_a)^T Sigma_a^-1 (x - mu_a) / 2)
    and f = exp(-(x - mu_f)^T Sigma_f^-1 (x - mu_f) / 2)."""

    mu_a: FloatArray
    sigma_a: FloatArray
    mu_f: FloatArray
    sigma_f: FloatArray
    amplitude: float = 1.0
    wavenumber: float = 1.0
    expansion_eps: float = 1e-10
    expansion_delta: float = 1e-7
    expansion_radius: float = 25.0
    iterations: int = 1
    red_eps: float = 1e-12
    svd_tol: float = 1e-13
    coeff_trunc: float = COEFF_TRUNCATION

    def __post_init__(self) -> None:
        d: int = self.mu_f.shape[0]
        for name, value in (("mu_a", self.mu_a), ("sigma_a", self.sigma_a), ("sigma_f", self.sigma_f)):
            if value.shape[0] != d:
                raise DimMismatchError(f"{name} has leading dimension {value.shape[0]}, expected {d}")
        if self.iterations < 1:
            raise ValueError(f"need at least one iteration, got {self.iterations}")

    @classmethod
    def aligned(cls, d: int, rng: np.random.Generator, **options: Any) -> "EllipticProblem":
        """Sigma_a and Sigma_f share eigenvectors; spectra contain 0.1 and 20, the rest U(0.1, 20)."""
        u: FloatArray = random_unitary(d, rng)
        d_a: FloatArray = _spectrum(d, 0.1, 20.0, rng)
        d_f: FloatArray = _spectrum(d, 0.1, 20.0, rng)
        return cls(mu_a=np.eye(d)[0], sigma_a=(u * d_a) @ u.T, mu_f=np.zeros(d), sigma_f=(u * d_f) @ u.T, **options)

    @classmethod
    def non_aligned(cls, d: int, rng: np.random.Generator, **options: Any) -> "EllipticProblem":
        """Independent eigenvectors; spectra contain 0.1 and 1, the rest U(0.1, 1)."""
        u_a: FloatArray = random_unitary(d, rng)
        u_f: FloatArray = random_unitary(d, rng)
        d_a: FloatArray = _spectrum(d, 0.1, 1.0, rng)
        d_f: FloatArray = _spectrum(d, 0.1, 1.0, rng)
        return cls(mu_a=np.eye(d)[0], sigma_a=(u_a * d_a) @ u_a.T, mu_f=np.zeros(d),
                   sigma_f=(u_f * d_f) @ u_f.T, **options)

    @property
    def dim(self) -> int:
        return int(self.mu_f.shape[0])

    @property
    def contrast(self) -> float:
        return 1.0 + self.amplitude

    @cached_property
    def bump(self) -> Mixture:
        return Mixture.full(np.ones(1), self.mu_a[None, :], self.sigma_a[None, :, :])

    @cached_property
    def forcing_mixture(self) -> Mixture:
        unit: Mixture = Mixture.full(np.ones(1), self.mu_f[None, :], self.sigma_f[None, :, :])
        return Mixture(np.exp(-unit.log_norms), unit.means, unit.covs, CovKind.FULL)

    @cached_property
    def green_expansion(self) -> KernelExpansion:
        return helmholtz_kernel_expansion(self.dim, self.wavenumber, self.expansion_eps,
                                          self.expansion_delta, self.expansion_radius)

    def coefficient(self, x: ArrayLike) -> FloatArray:
        values: FloatArray = np.atleast_1d(np.asarray(mixture_eval(self.bump, x), dtype=np.float64))
        return 1.0 + self.amplitude * values * math.exp(-float(self.bump.log_norms[0]))

    def forcing(self, x: ArrayLike) -> FloatArray:
        return np.atleast_1d(np.asarray(mixture_eval(self.forcing_mixture, x), dtype=np.float64))


def _matvec(a: FloatArray, v: FloatArray) -> FloatArray:
    return np.einsum("...jk,...k->...j", a, v)


def _product(mu_a: FloatArray, cov_a: FloatArray, mu_b: FloatArray,
             cov_b: FloatArray) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """exp-form Gaussian product: E_a E_b = exp(log_scale) E(mean, cov). Broadcasts over leading axes."""
    s_inv: FloatArray = np.linalg.inv(cov_a + cov_b)
    delta: FloatArray = mu_a - mu_b
    log_scale: FloatArray = -0.5 * np.sum(delta * _matvec(s_inv, delta), axis=-1)
    cov: FloatArray = cov_a @ s_inv @ cov_b
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    mean: FloatArray = _matvec(cov_b @ s_inv, mu_a) + _matvec(cov_a @ s_inv, mu_b)
    return log_scale, mean, cov


def _half_log_det_2pi(cov: FloatArray) -> FloatArray:
    d: int = cov.shape[-1]
    return 0.5 * (d * LOG_2PI + np.linalg.slogdet(cov)[1])


@dataclass(frozen=True, eq=False)
class EllipticBasis:
    basis: Mixture
    u0: Mixture
    n_candidates: int

    @property
    def size(self) -> int:
        return self.basis.size


def _iteration_candidates(current: Mixture, p: EllipticProblem, e: KernelExpansion) -> Optional[Mixture]:
    """Gaussian parts of G * div((a - 1) grad u): each product E_a g_l, widened by each kernel term.
    Coefficients are amplitude estimates that drop the polynomial factors except for tr(P_l)."""
    if p.amplitude == 0.0:
        return None
    d: int = current.dim
    full: Mixture = current.as_kind(CovKind.FULL)
    log_scale, means, covs = _product(p.mu_a, p.sigma_a, full.means, full.covs)
    trace_p: FloatArray = np.trace(_precisions(full), axis1=1, axis2=2)
    log_dets: FloatArray = np.linalg.slogdet(covs)[1]

    spread: FloatArray = 0.5 / e.exponents
    widened: FloatArray = (covs[:, None, :, :] + spread[None, :, None, None] * np.eye(d)).reshape(-1, d, d)
    widened_log_dets: FloatArray = np.linalg.slogdet(widened)[1]
    log_amp: FloatArray = (
        (full.log_norms + log_scale + np.log(trace_p) + 0.5 * log_dets)[:, None]
        + (np.log(e.weights) + 0.5 * d * (math.log(math.pi) - np.log(e.exponents)))[None, :]
    ).reshape(-1)
    log_amp = log_amp - 0.5 * widened_log_dets - np.asarray(log_normalizer(widened_log_dets, d))
    coeffs: FloatArray = p.amplitude * np.repeat(full.coeffs, e.n_terms) * np.exp(log_amp)
    kept: IndexArray = np.flatnonzero(np.abs(coeffs) >= p.coeff_trunc)
    if kept.size == 0:
        return None
    return Mixture(coeffs[kept], np.repeat(means, e.n_terms, axis=0)[kept], widened[kept], CovKind.FULL)


def elliptic_basis(p: EllipticProblem, workers: int = 1) -> EllipticBasis:
    """Gaussian atoms for the ansatz: every atom of u_0 = G * f together with the Gaussian parts
    of p.iterations fixed-point iterations, deduplicated and reduced to a linearly independent set.

    The first iteration starts from all atoms of u_0, so products with the coefficient bump are
    widened at every scale of the kernel; later iterations start from the previous basis.
    """
    e: KernelExpansion = p.green_expansion
    if e.kind != "helmholtz":
        raise ExpansionKindMismatchError(f"the elliptic solver needs a Helmholtz expansion, got '{e.kind}'")
    u0_full: Mixture = convolve_with_kernel(p.forcing_mixture, e, p.coeff_trunc)
    u0: Mixture = cholesky_reduce(GaussianFamily(u0_full, workers), u0_full.coeffs, p.red_eps).apply(u0_full)
    logger.info("elliptic d=%d: u0 has %d terms, %d after reduction", p.dim, u0_full.size, u0.size)

    seed: Mixture = u0_full
    basis: Mixture = u0
    n_candidates: int = u0_full.size
    for iteration in range(p.iterations):
        candidates: Optional[Mixture] = _iteration_candidates(seed, p, e)
        if candidates is None:
            break
        pool: Mixture = Mixture.concat([u0_full, candidates]).merge_duplicates()
        n_candidates = pool.size
        skeleton: IndexArray = pivoted_cholesky(GaussianFamily(pool, workers), p.red_eps).skeleton
        basis = seed = pool.subset(skeleton)
        logger.info("iteration %d: %d candidates -> %d basis atoms", iteration + 1, pool.size, basis.size)
    return EllipticBasis(basis=basis, u0=u0, n_candidates=n_candidates)


def _stiffness_row(k: int, rows: slice, m: Mixture, precisions: FloatArray, p: EllipticProblem) -> FloatArray:
    """<a grad g_l, grad g_k> + wavenumber^2 <g_l, g_k> for l in rows."""
    mu_l, cov_l = m.means[rows], m.covs[rows]
    mu_k, cov_k = m.means[k], m.covs[k]
    log_nn: FloatArray = m.log_norms[rows] + m.log_norms[k]
    couple: FloatArray = precisions[rows] @ precisions[k]

    def moment(mean: FloatArray, cov: FloatArray) -> FloatArray:
        # E[(x - mu_l)^T P_l P_k (x - mu_k)] under N(mean, cov)
        trace: FloatArray = np.einsum("aij,aji->a", couple, cov)
        return trace + np.sum((mean - mu_l) * _matvec(couple, mean - mu_k), axis=1)

    log_scale, mean, cov = _product(mu_l, cov_l, mu_k, cov_k)
    overlap: FloatArray = np.exp(log_nn + log_scale + _half_log_det_2pi(cov))
    row: FloatArray = overlap * (moment(mean, cov) + p.wavenumber**2)
    if p.amplitude != 0.0:
        log_scale_a, mean_a, cov_a = _product(mean, cov, p.mu_a, p.sigma_a)
        row += p.amplitude * np.exp(log_nn + log_scale + log_scale_a + _half_log_det_2pi(cov_a)) * moment(mean_a, cov_a)
    return row


def galerkin_system(basis: Mixture, p: EllipticProblem) -> Tuple[FloatArray, FloatArray]:
    """Weak-form matrix A[k, l] and load vector b[k] = <f, g_k>. A is filled by rows of its upper
    triangle and mirrored, so it is exactly symmetric."""
    if basis.dim != p.dim:
        raise DimMismatchError(f"basis has d={basis.dim}, problem has d={p.dim}")
    m: Mixture = basis.as_kind(CovKind.FULL)
    n: int = m.size
    precisions: FloatArray = _precisions(m)
    matrix: FloatArray = np.empty((n, n))
    for k in range(n):
        row: FloatArray = _stiffness_row(k, slice(k, n), m, precisions, p)
        matrix[k, k:] = row
        matrix[k:, k] = row
    log_scale, _, cov = _product(m.means, m.covs, p.mu_f, p.sigma_f)
    load: FloatArray = np.exp(m.log_norms + log_scale + _half_log_det_2pi(cov))
    return matrix, load


@dataclass(frozen=True, eq=False)
class GalerkinSolution:
    solution: Mixture
    rank: int

    @property
    def size(self) -> int:
        return self.solution.size


def elliptic_galerkin_solve(basis: Mixture, p: EllipticProblem) -> GalerkinSolution:
    matrix, load = galerkin_system(basis, p)
    coeffs, rank = svd_lstsq_with_rank(matrix, load, p.svd_tol)
    if rank < basis.size:
        logger.info("galerkin system of size %d has numerical rank %d", basis.size, rank)
    return GalerkinSolution(solution=basis.subset(np.arange(basis.size), coeffs), rank=rank)


def frequency_vectors(u: Mixture, n_samples: int = DEFAULT_SAMPLES) -> FloatArray:
    """s_k v_j^(l) for log-spaced s_k on [1e-5, s_max] along the eigenvectors of every atom of u,
    where exp(-lambda_min s_max^2 / 2) = 1e-10."""
    n, d = u.size, u.dim
    covs: FloatArray = u.full_covs()
    eigenvalues: FloatArray = np.empty((n, d))
    directions: FloatArray = np.empty((n, d, d))
    for i in range(n):
        eigenvalues[i], directions[i] = sym_eigen(covs[i])
    s_max: float = math.sqrt(-2.0 * math.log(SAMPLE_DECAY) / float(np.min(eigenvalues)))
    s: FloatArray = np.geomspace(FREQUENCY_MIN, max(s_max, 10.0 * FREQUENCY_MIN), n_samples)
    vectors: FloatArray = np.swapaxes(directions, 1, 2).reshape(-1, d)
    return (s[None, :, None] * vectors[:, None, :]).reshape(-1, d)


def _flux_fourier(u: Mixture, p: EllipticProblem, xi: FloatArray) -> NDArray[np.complex128]:
    """Fourier transform of -div((a - 1) grad u) at the rows of xi."""
    full: Mixture = u.as_kind(CovKind.FULL)
    precisions: FloatArray = _precisions(full)
    log_scale, means, covs = _product(full.means, full.covs, p.mu_a, p.sigma_a)
    strengths: FloatArray = p.amplitude * full.coeffs * np.exp(full.log_norms + log_scale)
    half_log_dets: FloatArray = 0.5 * np.linalg.slogdet(covs)[1]
    shifts: FloatArray = means - full.means

    result: NDArray[np.complex128] = np.zeros(xi.shape[0], dtype=np.complex128)
    block: int = max(1, EVAL_BLOCK // max(1, full.size * full.dim))
    for start in range(0, xi.shape[0], block):
        chunk: FloatArray = xi[start: start + block]
        c_xi: FloatArray = np.einsum("ljk,bk->lbj", covs, chunk)
        p_xi: FloatArray = np.einsum("ljk,bk->lbj", precisions, chunk)
        quad: FloatArray = np.einsum("bj,lbj->lb", chunk, c_xi)
        transform: NDArray[np.complex128] = np.exp(
            half_log_dets[:, None] - 0.5 * quad - 1j * (means @ chunk.T)
        )
        bracket: NDArray[np.complex128] = np.einsum("lbj,lj->lb", p_xi, shifts) - 1j * np.einsum("lbj,lbj->lb", p_xi, c_xi)
        result[start: start + block] = 1j * (strengths @ (bracket * transform))
    return result


def elliptic_residual_fourier(u: Mixture, p: EllipticProblem, n_samples: int = DEFAULT_SAMPLES) -> float:
    """max |h^(xi)| / max |f^(xi)| for h = -div(a grad u) + k^2 u - f, unitary transform."""
    if u.dim != p.dim:
        raise DimMismatchError(f"solution has d={u.dim}, problem has d={p.dim}")
    xi: FloatArray = frequency_vectors(u, n_samples)
    f_hat: NDArray[np.complex128] = np.empty(xi.shape[0], dtype=np.complex128)
    residual: NDArray[np.complex128] = np.empty(xi.shape[0], dtype=np.complex128)
    block: int = max(1, EVAL_BLOCK // max(1, u.size * u.dim))
    for start in range(0, xi.shape[0], block):
        chunk: FloatArray = xi[start: start + block]
        radial: FloatArray = np.sum(chunk * chunk, axis=1) + p.wavenumber**2
        f_hat[start: start + block] = mixture_fourier(p.forcing_mixture, chunk)
        residual[start: start + block] = radial * mixture_fourier(u, chunk) - f_hat[start: start + block]
    if p.amplitude != 0.0:
        residual += _flux_fourier(u, p, xi)
    return float(np.max(np.abs(residual)) / np.max(np.abs(f_hat)))
