"""Brute-force references used to validate the closed forms: quadrature, special
functions, Monte-Carlo ball integrals and full-Gram checks."""
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import erf, ive

from mixred.base import FloatArray, InnerProductFamily, gram_matrix
from mixred.errors import MaxDepthExceededError
from mixred.rng import make_rng


QUAD_LIMIT: int = 400


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: FloatArray
    weights: FloatArray
    order: int

    def integrate(self, f: Callable[[FloatArray], FloatArray]) -> float:
        return float(self.weights @ f(self.nodes))


def gauss_legendre(order: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    if order < 1:
        raise ValueError(f"quadrature order must be positive, got {order}")
    nodes, weights = leggauss(order)
    half: float = 0.5 * (b - a)
    return QuadratureRule(nodes=half * nodes + 0.5 * (a + b), weights=half * weights, order=order)


def adaptive_quad_1d(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT)
        except integrate.IntegrationWarning as e:
            raise MaxDepthExceededError(f"adaptive quadrature on [{a}, {b}] did not reach {tol}: {e}") from e
    return float(value)


def adaptive_quad_2d(f: Callable[[float, float], float], x_range: Tuple[float, float],
                     y_range: Tuple[float, float], tol: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.dblquad(
                lambda y, x: f(x, y), x_range[0], x_range[1], y_range[0], y_range[1], epsabs=tol, epsrel=tol
            )
        except integrate.IntegrationWarning as e:
            raise MaxDepthExceededError(f"2-D adaptive quadrature did not reach {tol}: {e}") from e
    return float(value)


def tensor_quad_2d(f: Callable[[FloatArray], FloatArray], low: Tuple[float, float],
                   high: Tuple[float, float], order: int) -> float:
    """Tensor Gauss-Legendre rule for f evaluated on an (n, 2) array of points."""
    rule_x = gauss_legendre(order, low[0], high[0])
    rule_y = gauss_legendre(order, low[1], high[1])
    xx, yy = np.meshgrid(rule_x.nodes, rule_y.nodes, indexing="ij")
    values: FloatArray = f(np.column_stack([xx.ravel(), yy.ravel()])).reshape(order, order)
    return float(rule_x.weights @ values @ rule_y.weights)


def error_function(x: FloatArray) -> FloatArray:
    return np.asarray(erf(x))


def bessel_i_scaled(nu: float, z: FloatArray) -> FloatArray:
    """exp(-z) I_nu(z) without overflow."""
    return np.asarray(ive(nu, z))


def bessel_i_half_scaled(z: FloatArray) -> FloatArray:
    """exp(-z) I_{1/2}(z) from the closed form sqrt(2 / (pi z)) sinh(z)."""
    return np.sqrt(2.0 / (np.pi * z)) * 0.5 * (1.0 - np.exp(-2.0 * z))


def bessel_k_half(z: FloatArray) -> FloatArray:
    return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z)


def gaussian_potential_3d(r: FloatArray, std: float = 1.0) -> FloatArray:
    """Newtonian potential in R^3 of exp(-|x|^2 / (2 std^2))."""
    mass: float = (2.0 * math.pi * std * std) ** 1.5
    return mass * error_function(r / (math.sqrt(2.0) * std)) / (4.0 * math.pi * r)


def ball_volume(d: int, radius: float) -> float:
    return math.pi ** (0.5 * d) * radius**d / math.gamma(0.5 * d + 1.0)


def mc_ball_integral(f: Callable[[FloatArray], FloatArray], center: FloatArray, radius: float,
                     n_samples: int, seed: int) -> Tuple[float, float]:
    """Monte-Carlo integral of f over a ball, with its standard error."""
    rng: np.random.Generator = make_rng(seed)
    d: int = int(center.shape[0])
    directions: FloatArray = rng.standard_normal((n_samples, d))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    radii: FloatArray = radius * rng.random(n_samples) ** (1.0 / d)
    values: FloatArray = f(center + radii[:, None] * directions)
    volume: float = ball_volume(d, radius)
    return volume * float(np.mean(values)), volume * float(np.std(values, ddof=1)) / math.sqrt(n_samples)


def gram_eigenvalues(family: InnerProductFamily) -> FloatArray:
    """Eigenvalues of the full Gram matrix in descending order."""
    return np.sort(np.linalg.eigvalsh(gram_matrix(family)))[::-1]


def cauchy_schwarz_violations(gram: FloatArray, rtol: float = 1e-12) -> int:
    diagonal: FloatArray = np.sqrt(np.clip(np.diag(gram), 0.0, None))
    bound: FloatArray = np.outer(diagonal, diagonal) * (1.0 + rtol) + rtol
    return int(np.count_nonzero(np.abs(gram) > bound))
