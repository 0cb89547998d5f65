"""Far-field kernel sums through skeleton sources, equivalent sources and seeded partitions.

Each source y_n is represented by the function K~(., y_n) of a Gaussian expansion of the
kernel on the source-target distance range. Two such functions are compared through
their integral over the target ball, which reduces to a radial integral per pair of
expansion terms.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist
from scipy.special import erf, erfcx, gammaln, ive

from mixred.base import FloatArray, IndexArray, InnerProductFamily
from mixred.dense_linalg import random_unitary, tri_solve
from mixred.errors import (
    CoincidentSourceTargetError,
    DimMismatchError,
    EmptyPointSetError,
    InvalidRangeError,
    QuadratureNotConvergedError,
)
from mixred.gaussian_core import GaussianFamily, Mixture
from mixred.numerical_oracles import gauss_legendre
from mixred.radial_kernels import KernelExpansion, inverse_power_expansion
from mixred.reduction import (
    MIN_THRESHOLD,
    PartialCholesky,
    ReductionResult,
    cholesky_reduce,
    pivoted_cholesky,
)
from mixred.rng import make_rng


logger = logging.getLogger(__name__)

CLOSED_FORM_3 = "closed3"
QUADRATURE = "quadrature"
MODES: List[str] = [CLOSED_FORM_3, QUADRATURE]

EXPANSION_EPS: float = 1e-8
RANGE_PADDING: float = 0.1
MIN_DISTANCE: float = 1e-12
PAIR_BLOCK: int = 1 << 20
QUAD_START_ORDER: int = 32
QUAD_MAX_ORDER: int = 4096
QUAD_RTOL: float = 1e-10
TINY_DISTANCE: float = 1e-12
CONTAINMENT_RTOL: float = 1e-12


def kernel_exponent(d: int) -> float:
    """r^(2-d) up to d = 5; r^-1 beyond, where r^(2-d) makes the far interaction negligible."""
    return d - 2.0 if 3 <= d <= 5 else 1.0


def _check_inside(name: str, points: FloatArray, center: FloatArray, radius: float) -> None:
    distances: FloatArray = np.linalg.norm(points - center, axis=1)
    outside: IndexArray = np.flatnonzero(distances > radius * (1.0 + CONTAINMENT_RTOL))
    if outside.size:
        raise InvalidRangeError(
            f"{outside.size} {name} points lie outside their ball of radius {radius:.6g}, "
            f"farthest at {float(np.max(distances)):.6g}"
        )


@dataclass(frozen=True, eq=False)
class SourceTargetConfig:
    sources: FloatArray
    strengths: FloatArray
    targets: FloatArray
    source_center: FloatArray
    source_radius: float
    target_center: FloatArray
    target_radius: float
    alpha: float

    def __post_init__(self) -> None:
        if self.sources.shape[0] == 0 or self.targets.shape[0] == 0:
            raise EmptyPointSetError("far-field sums need at least one source and one target")
        if self.sources.shape[1] != self.targets.shape[1]:
            raise DimMismatchError(
                f"sources live in d={self.sources.shape[1]}, targets in d={self.targets.shape[1]}"
            )
        if self.strengths.shape != (self.sources.shape[0],):
            raise DimMismatchError(f"{self.strengths.shape[0]} strengths for {self.sources.shape[0]} sources")
        for name, center in (("source", self.source_center), ("target", self.target_center)):
            if center.shape != (self.dim,):
                raise DimMismatchError(f"{name} center has shape {center.shape}, expected ({self.dim},)")
        if not (self.source_radius > 0.0 and self.target_radius > 0.0):
            raise InvalidRangeError(f"ball radii must be positive, got {self.source_radius} and {self.target_radius}")
        separation: float = float(np.linalg.norm(self.source_center - self.target_center))
        if separation <= self.source_radius + self.target_radius:
            raise InvalidRangeError(
                f"source and target balls are not separated: centers {separation:.6g} apart, "
                f"radii {self.source_radius:.6g} and {self.target_radius:.6g}"
            )
        _check_inside("source", self.sources, self.source_center, self.source_radius)
        _check_inside("target", self.targets, self.target_center, self.target_radius)

    @property
    def dim(self) -> int:
        return int(self.sources.shape[1])

    def distance_range(self, points: Optional[FloatArray] = None) -> Tuple[float, float]:
        """(dist_near, dist_far) between the given points (default: sources) and the targets."""
        distances: FloatArray = cdist(self.sources if points is None else points, self.targets)
        near: float = float(np.min(distances))
        if near < MIN_DISTANCE:
            raise CoincidentSourceTargetError(f"a source and a target are {near:.3e} apart")
        return near, float(np.max(distances))


def kernel_values(alpha: float, targets: FloatArray, sources: FloatArray) -> FloatArray:
    distances: FloatArray = cdist(targets, sources)
    if distances.size and float(np.min(distances)) < MIN_DISTANCE:
        raise CoincidentSourceTargetError("kernel evaluated at coincident source and target")
    return distances ** (-alpha)


def direct_sums(cfg: SourceTargetConfig, sources: Optional[FloatArray] = None,
                strengths: Optional[FloatArray] = None) -> FloatArray:
    """g_m = sum_n f_n |x_m - y_n|^-alpha, by default over all sources of cfg."""
    points: FloatArray = cfg.sources if sources is None else sources
    weights: FloatArray = cfg.strengths if strengths is None else strengths
    result: FloatArray = np.empty(cfg.targets.shape[0])
    block: int = max(1, PAIR_BLOCK // max(1, points.shape[0]))
    for start in range(0, cfg.targets.shape[0], block):
        chunk = slice(start, start + block)
        result[chunk] = kernel_values(cfg.alpha, cfg.targets[chunk], points) @ weights
    return result


def summation_error(exact: FloatArray, approx: FloatArray) -> float:
    """max |g - g~| / max |g|."""
    return float(np.max(np.abs(exact - approx)) / np.max(np.abs(exact)))


def far_field_expansion(cfg: SourceTargetConfig, points: Optional[FloatArray] = None,
                        eps: float = EXPANSION_EPS) -> KernelExpansion:
    """r^-alpha on the measured distance range padded by 10%, flat terms collapsed."""
    near, far = cfg.distance_range(points)
    return inverse_power_expansion(cfg.alpha, eps, (1.0 - RANGE_PADDING) * near, (1.0 + RANGE_PADDING) * far,
                                   dim=cfg.dim, collapse_flat=True)


def ball_integral_3d(tau: FloatArray, distance: FloatArray, radius: float) -> Tuple[FloatArray, FloatArray]:
    """Integral of exp(-tau |x - a|^2) over the 3-D ball of the given radius with |a| = distance,
    returned as (log_scale, value) with integral = exp(log_scale) * value."""
    tau, distance = np.broadcast_arrays(np.asarray(tau, dtype=np.float64), np.asarray(distance, dtype=np.float64))
    root: FloatArray = np.sqrt(tau)
    gap: FloatArray = distance - radius
    outside: np.ndarray = gap >= 0.0
    log_scale: FloatArray = np.where(outside, -tau * gap * gap, 0.0)
    volume_part: FloatArray = 0.5 * (math.pi / tau) ** 1.5
    spread: FloatArray = -np.expm1(-4.0 * tau * distance * radius)
    safe_distance: FloatArray = np.where(distance > TINY_DISTANCE, distance, 1.0)
    shell: FloatArray = math.pi / (2.0 * tau * tau * safe_distance) * spread

    # Outside the ball both terms carry exp(-tau (D - R)^2); erfcx keeps them finite.
    far_value: FloatArray = (
        volume_part * (erfcx(root * np.abs(gap)) - erfcx(root * (distance + radius)) * (1.0 - spread)) - shell
    )
    near_value: FloatArray = (
        volume_part * (erf(root * (radius - distance)) + erf(root * (radius + distance)))
        - shell * np.exp(-tau * gap * gap)
    )
    centered: FloatArray = (
        2.0 * volume_part * erf(root * radius) - 2.0 * math.pi * radius * np.exp(-tau * radius * radius) / tau
    )
    value: FloatArray = np.where(outside, far_value, np.where(distance > TINY_DISTANCE, near_value, centered))
    return log_scale, value


def ball_integral_quadrature(tau: FloatArray, distance: FloatArray, radius: float, dim: int) -> FloatArray:
    """The same ball integral in dimension dim from its radial form
    2 pi^(d/2) (tau D)^-nu int_0^R ive(nu, 2 tau D r) exp(-tau (D - r)^2) r^(d/2) dr, nu = d/2 - 1,
    with Gauss-Legendre order doubling until two orders agree to 1e-10."""
    tau, distance = np.broadcast_arrays(np.asarray(tau, dtype=np.float64), np.asarray(distance, dtype=np.float64))
    nu: float = 0.5 * dim - 1.0
    centered: np.ndarray = distance <= TINY_DISTANCE
    safe_distance: FloatArray = np.where(centered, 1.0, distance)
    log_prefactor: FloatArray = math.log(2.0) + 0.5 * dim * math.log(math.pi) - nu * np.log(tau * safe_distance)
    log_sphere: float = math.log(2.0) + 0.5 * dim * math.log(math.pi) - float(gammaln(0.5 * dim))

    def integrate(order: int) -> FloatArray:
        rule = gauss_legendre(order, 0.0, radius)
        r: FloatArray = rule.nodes
        argument: FloatArray = 2.0 * tau[..., None] * safe_distance[..., None] * r
        off_center: FloatArray = np.exp(log_prefactor[..., None] - tau[..., None] * (safe_distance[..., None] - r) ** 2) \
            * ive(nu, argument) * r ** (0.5 * dim)
        at_center: FloatArray = np.exp(log_sphere - tau[..., None] * r * r) * r ** (dim - 1)
        return np.asarray(np.where(centered[..., None], at_center, off_center) @ rule.weights)

    previous: FloatArray = integrate(QUAD_START_ORDER)
    order: int = QUAD_START_ORDER
    while order < QUAD_MAX_ORDER:
        order *= 2
        current: FloatArray = integrate(order)
        scale: FloatArray = np.maximum(np.abs(current), np.finfo(np.float64).tiny)
        if np.all(np.abs(current - previous) <= QUAD_RTOL * scale):
            return current
        previous = current
    raise QuadratureNotConvergedError(f"ball integral did not converge by order {QUAD_MAX_ORDER}")


class BallInnerFamily(InnerProductFamily):
    """Functions K~(., y_n) compared by their integral over the target ball, rescaled to unit norm.

    `mode` closed3 uses the 3-D closed form whatever the ambient dimension; `quadrature`
    integrates in `quad_dim` dimensions.
    """

    def __init__(self, points: FloatArray, expansion: KernelExpansion, center: FloatArray, radius: float,
                 mode: str = CLOSED_FORM_3, quad_dim: int = 3, workers: int = 1) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown inner product mode '{mode}', expected one of {MODES}")
        self.points: FloatArray = np.asarray(points, dtype=np.float64)
        self.expansion: KernelExpansion = expansion
        self.center: FloatArray = np.asarray(center, dtype=np.float64)
        self.radius: float = radius
        self.mode: str = mode
        self.quad_dim: int = quad_dim
        self.workers = workers
        self.offsets: FloatArray = self.points - self.center
        self.offset_norms2: FloatArray = np.sum(self.offsets * self.offsets, axis=1)
        self.scales: FloatArray = np.sqrt(self._chunked(np.arange(self.size), None))

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def _raw(self, rows: IndexArray, j: Optional[int]) -> FloatArray:
        """Unnormalized inner products <K~(., y_i), K~(., y_j)> for i in rows; j=None pairs each row with itself."""
        tau: FloatArray = self.expansion.exponents
        weights: FloatArray = self.expansion.weights
        total_tau: FloatArray = tau[:, None] + tau[None, :]
        a: FloatArray = tau[:, None] / total_tau
        b: FloatArray = 1.0 - a
        if j is None:
            separation2: FloatArray = np.zeros(rows.size)
            cross: FloatArray = self.offset_norms2[rows]
            other_norms2: FloatArray = self.offset_norms2[rows][:, None, None]
        else:
            separation2 = np.sum((self.points[rows] - self.points[j]) ** 2, axis=1)
            cross = self.offsets[rows] @ self.offsets[j]
            other_norms2 = np.full((rows.size, 1, 1), self.offset_norms2[j])
        # |x_c - (a y_i + b y_j)|^2 expanded in the offsets from the ball center
        distance2: FloatArray = (
            a * a * self.offset_norms2[rows][:, None, None]
            + b * b * other_norms2
            + 2.0 * a * b * cross[:, None, None]
        )
        distance: FloatArray = np.sqrt(np.maximum(distance2, 0.0))
        log_pair: FloatArray = (
            np.log(weights[:, None] * weights[None, :])
            - (tau[:, None] * tau[None, :] / total_tau) * separation2[:, None, None]
        )
        if self.mode == CLOSED_FORM_3:
            log_scale, value = ball_integral_3d(total_tau, distance, self.radius)
            terms: FloatArray = np.exp(log_pair + log_scale) * value
        else:
            terms = np.exp(log_pair) * ball_integral_quadrature(
                np.broadcast_to(total_tau, distance.shape), distance, self.radius, self.quad_dim
            )
        return np.asarray(np.sum(terms, axis=(1, 2)))

    def _chunked(self, indices: IndexArray, j: Optional[int]) -> FloatArray:
        pairs: int = max(1, self.expansion.n_terms**2)
        if self.mode == QUADRATURE:
            pairs *= QUAD_START_ORDER
        block: int = max(1, PAIR_BLOCK // pairs)
        if not indices.size:
            return np.zeros(0)
        return np.concatenate(
            [self._raw(indices[start: start + block], j) for start in range(0, indices.size, block)]
        )

    def _column_slice(self, j: int, rows: slice) -> FloatArray:
        indices: IndexArray = np.arange(self.size)[rows]
        raw: FloatArray = self._chunked(indices, j)
        return raw / (self.scales[indices] * self.scales[j])


def ball_inner(n: int, n_prime: int, fam: BallInnerFamily) -> float:
    return fam.inner(n, n_prime)


@dataclass(frozen=True, eq=False)
class SkeletonSources:
    skeleton: IndexArray
    strengths: FloatArray
    reduction: ReductionResult
    expansion: KernelExpansion

    @property
    def rank(self) -> int:
        return int(self.skeleton.shape[0])


def skeleton_sources(cfg: SourceTargetConfig, eps: float, mode: str = CLOSED_FORM_3,
                     expansion_eps: float = EXPANSION_EPS, workers: int = 1) -> SkeletonSources:
    """Skeleton subset of the sources with strengths reproducing their far field on the target ball."""
    expansion: KernelExpansion = far_field_expansion(cfg, eps=expansion_eps)
    family = BallInnerFamily(cfg.sources, expansion, cfg.target_center, cfg.target_radius, mode=mode,
                             workers=workers)
    reduction: ReductionResult = cholesky_reduce(family, cfg.strengths * family.scales, eps)
    strengths: FloatArray = reduction.coeffs / family.scales[reduction.skeleton]
    logger.info("skeleton sources d=%d: %d -> %d", cfg.dim, family.size, reduction.rank)
    return SkeletonSources(reduction.skeleton, strengths, reduction, expansion)


@dataclass(frozen=True, eq=False)
class SkeletonTargets:
    skeleton: IndexArray
    interpolation: FloatArray
    expansion: KernelExpansion

    @property
    def rank(self) -> int:
        return int(self.skeleton.shape[0])

    def apply(self, skeleton_values: FloatArray) -> FloatArray:
        """Values at all targets from values at the skeleton targets."""
        return np.asarray(self.interpolation @ skeleton_values)


def skeleton_targets(cfg: SourceTargetConfig, eps: float, mode: str = CLOSED_FORM_3,
                     expansion_eps: float = EXPANSION_EPS, workers: int = 1) -> SkeletonTargets:
    """Transposed problem: targets compared over the source ball. Row m of the interpolation
    matrix expresses the target function at x_m in the skeleton targets."""
    expansion: KernelExpansion = far_field_expansion(cfg, eps=expansion_eps)
    family = BallInnerFamily(cfg.targets, expansion, cfg.source_center, cfg.source_radius, mode=mode,
                             workers=workers)
    partial: PartialCholesky = pivoted_cholesky(family, eps)
    skeleton: IndexArray = partial.skeleton
    l_skeleton: FloatArray = partial.columns[skeleton]
    # Column m of X solves L_s L_s^T x = L_s l_m, scaled back to unnormalized functions.
    solved: FloatArray = np.asarray(tri_solve(l_skeleton, partial.columns.T, transpose=True))
    interpolation: FloatArray = (solved.T * family.scales[:, None]) / family.scales[skeleton][None, :]
    logger.info("skeleton targets d=%d: %d -> %d", cfg.dim, family.size, skeleton.size)
    return SkeletonTargets(skeleton, interpolation, expansion)


@dataclass(frozen=True, eq=False)
class EquivalentSources:
    candidates: FloatArray
    selected: IndexArray
    candidate_strengths: FloatArray
    retained: IndexArray
    retained_strengths: FloatArray
    reduction: ReductionResult

    def sources_and_strengths(self, cfg: SourceTargetConfig) -> Tuple[FloatArray, FloatArray]:
        return (
            np.concatenate([self.candidates[self.selected], cfg.sources[self.retained]]),
            np.concatenate([self.candidate_strengths, self.retained_strengths]),
        )


def equivalent_sources(cfg: SourceTargetConfig, candidates: FloatArray, eps: float, mode: str = CLOSED_FORM_3,
                       expansion_eps: float = EXPANSION_EPS, workers: int = 1) -> EquivalentSources:
    """Pivots among the candidates first, then among the true sources; candidates start with zero strength."""
    k: int = candidates.shape[0]
    points: FloatArray = np.concatenate([candidates, cfg.sources]) if k else cfg.sources
    expansion: KernelExpansion = far_field_expansion(cfg, points, eps=expansion_eps)
    family = BallInnerFamily(points, expansion, cfg.target_center, cfg.target_radius, mode=mode,
                             quad_dim=cfg.dim, workers=workers)
    coeffs: FloatArray = np.concatenate([np.zeros(k), cfg.strengths]) * family.scales
    reduction: ReductionResult = cholesky_reduce(family, coeffs, eps, first_pool=list(range(k)) if k else None)
    strengths: FloatArray = reduction.coeffs / family.scales[reduction.skeleton]
    is_candidate: np.ndarray = reduction.skeleton < k
    logger.info("equivalent sources: %d of %d candidates, %d true sources kept",
                int(np.count_nonzero(is_candidate)), k, int(np.count_nonzero(~is_candidate)))
    return EquivalentSources(
        candidates=candidates,
        selected=reduction.skeleton[is_candidate],
        candidate_strengths=strengths[is_candidate],
        retained=reduction.skeleton[~is_candidate] - k,
        retained_strengths=strengths[~is_candidate],
        reduction=reduction,
    )


def circle_candidates(center: FloatArray, count: int, radius: float = 1.0) -> FloatArray:
    theta: FloatArray = 2.0 * math.pi * np.arange(count) / count
    return np.asarray(center + radius * np.column_stack([np.cos(theta), np.sin(theta)]))


def sphere_candidates(center: FloatArray, n_theta: int, n_phi: int, radius: float = 1.0) -> FloatArray:
    """Equispaced azimuths times Gauss-Legendre polar angles on [0, pi]."""
    theta: FloatArray = 2.0 * math.pi * np.arange(n_theta) / n_theta
    phi: FloatArray = gauss_legendre(n_phi, 0.0, math.pi).nodes
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    unit: FloatArray = np.column_stack([
        (np.cos(tt) * np.sin(pp)).ravel(), (np.sin(tt) * np.sin(pp)).ravel(), np.cos(pp).ravel()
    ])
    return np.asarray(center + radius * unit)


def _fit_ball(points: FloatArray, radius: float, center: FloatArray) -> FloatArray:
    """Rescales points about their origin so the farthest lies at the radius, then translates."""
    return center + points * (radius / float(np.max(np.linalg.norm(points, axis=1))))


def planar_sources_config(d: int, n_sources: int, n_targets: int, seed: int,
                          shift: float = 2.0) -> SourceTargetConfig:
    """Sources on a rotated random plane in the unit ball and Gaussian targets in the unit ball,
    shifted by +shift and -shift along the first axis; strengths U(0, 1)."""
    if d < 2:
        raise InvalidRangeError(f"the planar source setup needs d >= 2, got {d}")
    rng: np.random.Generator = make_rng(seed)
    planar: FloatArray = np.zeros((n_sources, d))
    planar[:, :2] = rng.standard_normal((n_sources, 2))
    rotated: FloatArray = planar @ random_unitary(d, rng).T
    offset: FloatArray = np.zeros(d)
    offset[0] = shift
    sources: FloatArray = _fit_ball(rotated, 1.0, offset)
    targets: FloatArray = _fit_ball(rng.standard_normal((n_targets, d)), 1.0, -offset)
    strengths: FloatArray = rng.uniform(0.0, 1.0, n_sources)
    return SourceTargetConfig(sources, strengths, targets, offset, 1.0, -offset, 1.0, kernel_exponent(d))


def equivalent_sources_config(d: int, n_sources: int, n_targets: int, seed: int) -> SourceTargetConfig:
    """Gaussian sources in the ball of radius 0.9 about (2, 0, ...) and targets in the unit
    ball about (-2, 0, ...), kernel 1/r."""
    rng: np.random.Generator = make_rng(seed)
    source_center: FloatArray = np.zeros(d)
    source_center[0] = 2.0
    sources: FloatArray = _fit_ball(rng.standard_normal((n_sources, d)), 0.9, source_center)
    targets: FloatArray = _fit_ball(rng.standard_normal((n_targets, d)), 1.0, -source_center)
    strengths: FloatArray = rng.uniform(0.0, 1.0, n_sources)
    return SourceTargetConfig(sources, strengths, targets, source_center, 0.9, -source_center, 1.0, 1.0)


@dataclass(frozen=True, eq=False)
class SeedSelection:
    seeds: IndexArray
    mean: FloatArray
    pivot_values: FloatArray


def select_seeds(points: ArrayLike, h: float, n_seeds: int, include_mean: bool = False) -> SeedSelection:
    """First pivots of the Gaussians exp(-|x - x_i|^2 / h) at the points, with the data mean forced first.

    With include_mean the data point nearest the mean is reported as the first seed.
    """
    data: FloatArray = np.asarray(points, dtype=np.float64)
    if n_seeds < 1:
        raise ValueError(f"need at least one seed, got {n_seeds}")
    if data.shape[0] == 0:
        raise EmptyPointSetError("cannot select seeds from zero points")
    mean: FloatArray = np.mean(data, axis=0)
    atoms: Mixture = Mixture.isotropic(np.ones(data.shape[0] + 1), np.vstack([mean, data]), 0.5 * h)
    partial: PartialCholesky = pivoted_cholesky(
        GaussianFamily(atoms), MIN_THRESHOLD, forced=[0], max_rank=n_seeds + 1
    )
    seeds: IndexArray = partial.skeleton[1:] - 1
    if include_mean:
        nearest: int = int(np.argmin(np.sum((data - mean) ** 2, axis=1)))
        seeds = np.concatenate([[nearest], seeds[seeds != nearest]])[: n_seeds].astype(np.intp)
    if seeds.size < n_seeds:
        logger.info("only %d significant seeds among %d points", seeds.size, data.shape[0])
    return SeedSelection(seeds=seeds, mean=mean, pivot_values=partial.pivot_values)


def assign_groups(points: ArrayLike, seeds: ArrayLike) -> IndexArray:
    """Index of the nearest seed for every point; ties go to the lower seed index."""
    data: FloatArray = np.asarray(points, dtype=np.float64)
    seed_points: FloatArray = np.asarray(seeds, dtype=np.float64)
    if seed_points.size == 0:
        raise EmptyPointSetError("cannot assign groups without seeds")
    seed_points = seed_points.reshape(-1, data.shape[1])
    return np.argmin(cdist(data, seed_points, "sqeuclidean"), axis=1).astype(np.intp)


def group_sizes(labels: IndexArray, n_groups: int) -> IndexArray:
    return np.bincount(labels, minlength=n_groups).astype(np.intp)


def reduced_target_sums(cfg: SourceTargetConfig, result: SkeletonTargets) -> FloatArray:
    """Target values from exact sums at the skeleton targets only."""
    sub = SourceTargetConfig(cfg.sources, cfg.strengths, cfg.targets[result.skeleton], cfg.source_center,
                             cfg.source_radius, cfg.target_center, cfg.target_radius, cfg.alpha)
    return result.apply(direct_sums(sub))
