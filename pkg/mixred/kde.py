"""Gaussian kernel density estimates compressed to a subset of their data points."""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from mixred.base import FloatArray
from mixred.dense_linalg import random_unitary
from mixred.errors import EmptyPointSetError, InvalidRangeError
from mixred.gaussian_core import GaussianFamily, Mixture, mixture_eval
from mixred.reduction import ReductionResult, cholesky_reduce
from mixred.rng import make_rng


logger = logging.getLogger(__name__)

# Bandwidth of the 1-D bimodal example, taken as given.
BIMODAL_BANDWIDTH: float = 0.20121412622314902019
BIMODAL_MEANS: Tuple[float, float] = (0.0, 4.0)
PLANE_MEANS: Tuple[Tuple[float, float], Tuple[float, float]] = ((0.0, 0.0), (3.0, 3.0))
PLANE_VARIANCES: Tuple[Tuple[float, float], Tuple[float, float]] = ((2.0, 0.5), (1.0, 1.0))
LINE_GRID_SIZE: int = 2048
LINE_GRID_MARGIN: float = 5.0
PLANE_GRID_SIZE: int = 64
PLANE_GRID_HALF_WIDTH: float = 8.0


def silverman_bandwidth(d_eff: int, n: int) -> float:
    """(4 / (2d + 1))^(1/(d+4)) N^(-1/(d+4)), optimal for a standard normal population."""
    if n < 1:
        raise EmptyPointSetError("bandwidth needs at least one point")
    exponent: float = 1.0 / (d_eff + 4.0)
    return (4.0 / (2.0 * d_eff + 1.0)) ** exponent * n ** -exponent


def _kernel_coefficient(n: int, d: int, h: float) -> float:
    """Mixture coefficient of one data point: the 1/(N h^d (2 pi)^(d/2)) kernel weight
    divided by the unit-atom normalizer (pi h^2)^(-d/4)."""
    return math.exp(-math.log(n) - 0.5 * d * math.log(2.0 * math.pi * h * h) + 0.25 * d * math.log(math.pi * h * h))


@dataclass(frozen=True, eq=False)
class KdeModel:
    points: FloatArray
    bandwidth: float
    mixture: Mixture
    reduced: Optional[Mixture] = None
    reduction: Optional[ReductionResult] = None

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def n_terms(self) -> int:
        return self.size if self.reduced is None else self.reduced.size

    def weights(self, mixture: Optional[Mixture] = None) -> FloatArray:
        """Kernel weights a_l in f = sum_l a_l K_h(x - x_l); 1/N each before reduction."""
        m: Mixture = self.mixture if mixture is None else mixture
        return m.coeffs / _kernel_coefficient(1, self.dim, self.bandwidth)

    def total_mass(self) -> float:
        return float(np.sum(self.weights(self.reduced)))

    def density(self, x: ArrayLike) -> FloatArray:
        return np.atleast_1d(np.asarray(mixture_eval(self.mixture, x)))

    def reduced_density(self, x: ArrayLike) -> FloatArray:
        if self.reduced is None:
            raise ValueError("model has not been reduced")
        return np.atleast_1d(np.asarray(mixture_eval(self.reduced, x)))


def kde_build(points: ArrayLike, h: float) -> KdeModel:
    data: FloatArray = np.asarray(points, dtype=np.float64)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    if data.shape[0] == 0:
        raise EmptyPointSetError("cannot build a density estimate from zero points")
    if not h > 0.0:
        raise InvalidRangeError(f"bandwidth must be positive, got {h}")
    n, d = data.shape
    mixture: Mixture = Mixture.isotropic(np.full(n, _kernel_coefficient(n, d, h)), data, h * h)
    return KdeModel(points=data, bandwidth=h, mixture=mixture)


def kde_reduce(model: KdeModel, eps: float, workers: int = 1) -> KdeModel:
    """Cholesky reduction of the kernel sum at pivot threshold eps; surviving centers are data points."""
    reduction: ReductionResult = cholesky_reduce(GaussianFamily(model.mixture, workers), model.mixture.coeffs, eps)
    logger.info("kde d=%d: %d points -> %d kernels", model.dim, model.size, reduction.rank)
    return replace(model, reduced=reduction.apply(model.mixture), reduction=reduction)


def bimodal_dataset(n: int, seed: int) -> FloatArray:
    """Equal mixture of N(0, 1) and N(4, 1) in one dimension, shape (n, 1)."""
    rng: np.random.Generator = make_rng(seed)
    component: np.ndarray = rng.random(n) < 0.5
    centers: FloatArray = np.where(component, BIMODAL_MEANS[0], BIMODAL_MEANS[1])
    return (centers + rng.standard_normal(n)).reshape(-1, 1)


def bimodal_density(x: ArrayLike) -> FloatArray:
    values: FloatArray = np.asarray(x, dtype=np.float64).reshape(-1)
    return 0.5 * sum(
        np.exp(-0.5 * (values - mean) ** 2) / math.sqrt(2.0 * math.pi) for mean in BIMODAL_MEANS
    )


@dataclass(frozen=True, eq=False)
class PlaneDataset:
    points: FloatArray
    planar: FloatArray
    rotation: FloatArray

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


def rotated_plane_dataset(n: int, d: int, seed: int, rotate: bool = True) -> PlaneDataset:
    """Two-component planar Gaussian sample padded with zeros to d dimensions and rotated."""
    if d < 2:
        raise InvalidRangeError(f"the plane dataset needs d >= 2, got {d}")
    rng: np.random.Generator = make_rng(seed)
    component: np.ndarray = rng.random(n) < 0.5
    means: FloatArray = np.where(component[:, None], PLANE_MEANS[0], PLANE_MEANS[1])
    stds: FloatArray = np.sqrt(np.where(component[:, None], PLANE_VARIANCES[0], PLANE_VARIANCES[1]))
    planar: FloatArray = means + stds * rng.standard_normal((n, 2))
    rotation: FloatArray = random_unitary(d, rng) if rotate else np.eye(d)
    return PlaneDataset(points=embed_plane(planar, rotation), planar=planar, rotation=rotation)


def embed_plane(planar: FloatArray, rotation: FloatArray) -> FloatArray:
    """x = U (y1, y2, 0, ..., 0) for every planar row y."""
    return np.asarray(planar @ rotation[:, :2].T)


def planar_scale(d: int, h: float) -> float:
    """c_d with f(U y) = c_d * (2-D estimate at y) for data on the rotated plane."""
    return float(h ** (2 - d) * (2.0 * math.pi) ** (0.5 * (2 - d)))


def line_grid(model: KdeModel, size: int = LINE_GRID_SIZE) -> FloatArray:
    low: float = float(np.min(model.points)) - LINE_GRID_MARGIN * model.bandwidth
    high: float = float(np.max(model.points)) + LINE_GRID_MARGIN * model.bandwidth
    return np.linspace(low, high, size).reshape(-1, 1)


def plane_grid(size: int = PLANE_GRID_SIZE, half_width: float = PLANE_GRID_HALF_WIDTH) -> FloatArray:
    axis: FloatArray = np.linspace(-half_width, half_width, size)
    yy1, yy2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([yy1.ravel(), yy2.ravel()])


def plane_density(planar: ArrayLike) -> FloatArray:
    """Population density of the planar two-component sample."""
    y: FloatArray = np.atleast_2d(np.asarray(planar, dtype=np.float64))
    total: FloatArray = np.zeros(y.shape[0])
    for mean, variances in zip(PLANE_MEANS, PLANE_VARIANCES):
        quad: FloatArray = np.sum((y - np.asarray(mean)) ** 2 / np.asarray(variances), axis=1)
        total += np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(variances[0] * variances[1]))
    return 0.5 * total


def kde_grid_errors(model: KdeModel, grid: FloatArray) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """(f, F, |f - F|) at the grid points for the full and reduced estimates."""
    full: FloatArray = model.density(grid)
    reduced: FloatArray = model.reduced_density(grid)
    return full, reduced, np.abs(full - reduced)
