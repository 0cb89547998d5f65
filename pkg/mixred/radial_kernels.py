"""Sum-of-Gaussians expansions of radial kernels valid on an interval [delta, R].

Both kernels are integrals of Gaussians over a log-scale parameter t; a trapezoidal
rule with step h gives sum_l w_l exp(-tau_l r^2). Each tail of the series is dropped
while its summed contribution stays below a quarter of eps relative to the kernel on
[delta, R], and the result is checked against the exact kernel. When the check fails
the step is reduced and the expansion rebuilt.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import gammaln, kve

from mixred.base import FloatArray
from mixred.errors import InvalidRangeError, NoConvergenceError


logger = logging.getLogger(__name__)

TRUNCATION_GRID: int = 512
VALIDATION_GRID: int = 1000
PERIOD_SAMPLES: int = 32
STEP_BISECTIONS: int = 40
STEP_REDUCTION: float = 0.95
MAX_STEP_REDUCTIONS: int = 12
TAIL_SHARE: float = 0.25
COLLAPSE_LEVELS: Tuple[float, ...] = tuple(10.0 ** (-k / 4.0) for k in range(4, 41))


@dataclass(frozen=True, eq=False)
class KernelExpansion:
    dim: int
    kind: str
    step: float
    first_index: int
    last_index: int
    weights: FloatArray
    exponents: FloatArray
    delta: float
    radius: float
    eps: float
    wavenumber: Optional[float] = None
    alpha: Optional[float] = None
    scale: float = 1.0
    collapsed: int = 0

    @property
    def n_terms(self) -> int:
        return int(self.weights.shape[0])

    def exact(self, r: ArrayLike) -> FloatArray:
        radii: FloatArray = np.asarray(r, dtype=np.float64)
        if self.kind == "helmholtz":
            assert self.wavenumber is not None
            return np.exp(helmholtz_log_kernel(radii, self.dim, self.wavenumber))
        assert self.alpha is not None
        return self.scale * radii ** (-self.alpha)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.dim,
            "kind": self.kind,
            "k": self.wavenumber,
            "alpha": self.alpha,
            "scale": self.scale,
            "h": self.step,
            "first_index": self.first_index,
            "last_index": self.last_index,
            "weights": self.weights.tolist(),
            "exponents": self.exponents.tolist(),
            "delta": self.delta,
            "R": self.radius,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KernelExpansion":
        return cls(
            dim=int(data["d"]),
            kind=str(data["kind"]),
            step=float(data["h"]),
            first_index=int(data.get("first_index", 0)),
            last_index=int(data.get("last_index", len(data["weights"]) - 1)),
            weights=np.asarray(data["weights"], dtype=np.float64),
            exponents=np.asarray(data["exponents"], dtype=np.float64),
            delta=float(data["delta"]),
            radius=float(data["R"]),
            eps=float(data["eps"]),
            wavenumber=None if data.get("k") is None else float(data["k"]),
            alpha=None if data.get("alpha") is None else float(data["alpha"]),
            scale=float(data.get("scale", 1.0)),
        )


def step_size(alpha: float, eps: float) -> float:
    """Largest trapezoidal step the a priori bound allows for relative accuracy eps on r^-alpha."""
    return 2.0 * math.pi / (math.log(3.0) + 0.5 * alpha * math.log(1.0 / math.cos(1.0)) + math.log(1.0 / eps))


def series_error(alpha: float, step: float) -> float:
    """Max relative error of the untruncated trapezoidal series for r^-alpha.

    The error is periodic in log r^2 with period step, so sampling one period at r = 1
    covers every r > 0.
    """
    t_low: float = (2.0 / alpha) * (math.log(1e-20 * alpha) + gammaln(0.5 * alpha))
    t_high: float = math.log(80.0 + 4.0 * alpha)
    offsets: FloatArray = step * np.arange(PERIOD_SAMPLES) / PERIOD_SAMPLES
    nodes: FloatArray = step * np.arange(math.floor(t_low / step), math.ceil(t_high / step) + 1, dtype=np.float64)
    t: FloatArray = offsets[:, None] + nodes[None, :]
    series: FloatArray = np.sum(np.exp(math.log(step) - gammaln(0.5 * alpha) + 0.5 * alpha * t - np.exp(t)), axis=1)
    return float(np.max(np.abs(series - 1.0)))


def sharp_step(alpha: float, eps: float) -> float:
    """Largest step whose untruncated series stays within eps of r^-alpha; never below step_size."""
    low: float = step_size(alpha, eps)
    if series_error(alpha, low) > eps:
        return low
    high: float = 2.0 * low
    while series_error(alpha, high) <= eps and high < 16.0 * low:
        high *= 2.0
    for _ in range(STEP_BISECTIONS):
        middle: float = 0.5 * (low + high)
        if series_error(alpha, middle) <= eps:
            low = middle
        else:
            high = middle
    return low


def helmholtz_step(d: int, k: float, eps: float, R: float, sharp: bool = True) -> float:
    """The power-kernel step near r = 0, capped by the width (kR)^-1/2 of the integrand in t at r = R."""
    alpha: float = d - 2.0
    power: float = sharp_step(alpha, eps) if sharp else step_size(alpha, eps)
    return min(power, math.pi * math.sqrt(2.0 / (k * R * math.log(4.0 / eps))))


def power_constant(d: int) -> float:
    """C_d with -Laplace(C_d r^(2-d)) = delta in R^d."""
    return math.exp(gammaln(0.5 * d + 1.0) - math.log(d * (d - 2.0)) - 0.5 * d * math.log(math.pi))


def helmholtz_log_kernel(r: FloatArray, d: int, k: float) -> FloatArray:
    nu: float = 0.5 * d - 1.0
    return np.asarray(
        -0.5 * d * math.log(2.0 * math.pi) + nu * (math.log(k) - np.log(r)) + np.log(kve(nu, k * r)) - k * r
    )


def _check_range(delta: float, radius: float, eps: float) -> None:
    if not 0.0 < delta < radius:
        raise InvalidRangeError(f"expansion interval needs 0 < delta < R, got [{delta}, {radius}]")
    if not 0.0 < eps <= math.exp(-1.0):
        raise InvalidRangeError(f"expansion accuracy must lie in (0, 1/e], got {eps}")


def _relative_terms(log_weights: FloatArray, exponents: FloatArray, radii: FloatArray,
                    log_kernel: FloatArray) -> FloatArray:
    """w_l exp(-tau_l r^2) / G(r), shape (len(radii), n_terms)."""
    return np.exp(log_weights[None, :] - exponents[None, :] * radii[:, None] ** 2 - log_kernel[:, None])


def _tail_window(relative: FloatArray, budget: float) -> Tuple[int, int]:
    """First and last kept term such that each dropped tail sums to at most budget at every radius."""
    low: FloatArray = np.max(np.cumsum(relative, axis=1), axis=0)
    high: FloatArray = np.max(np.cumsum(relative[:, ::-1], axis=1), axis=0)[::-1]
    return int(np.searchsorted(low, budget, side="right")), int(np.count_nonzero(high > budget)) - 1


def _collapse_flat(weights: FloatArray, exponents: FloatArray, radius: float, kernel_at_radius: float,
                   budget: float) -> Tuple[FloatArray, FloatArray, int]:
    """Replaces the flattest terms by one term with the same total weight and first moment."""
    for level in COLLAPSE_LEVELS:
        flat: np.ndarray = exponents * radius**2 <= level
        count: int = int(np.count_nonzero(flat))
        if count < 2:
            continue
        total: float = float(np.sum(weights[flat]))
        centre: float = float(weights[flat] @ exponents[flat]) / total
        error: float = float(weights[flat] @ (exponents[flat] - centre) ** 2) * radius**4 / 2.0 / kernel_at_radius
        if error <= budget:
            return (
                np.concatenate([[total], weights[~flat]]),
                np.concatenate([[centre], exponents[~flat]]),
                count,
            )
    return weights, exponents, 0


def _build(
    dim: int,
    kind: str,
    step: float,
    t_low: float,
    t_high: float,
    log_weight: Callable[[FloatArray], FloatArray],
    log_exponent: Callable[[FloatArray], FloatArray],
    log_kernel: Callable[[FloatArray], FloatArray],
    delta: float,
    radius: float,
    eps: float,
    collapse_flat: bool,
    **extra: Any,
) -> KernelExpansion:
    """Trapezoidal nodes step * l on [t_low, t_high]; log_weight is the log integrand without the step."""
    indices: FloatArray = np.arange(math.floor(t_low / step), math.ceil(t_high / step) + 1, dtype=np.float64)
    t: FloatArray = step * indices
    log_weights: FloatArray = math.log(step) + log_weight(t)
    exponents: FloatArray = np.exp(log_exponent(t))
    grid: FloatArray = np.geomspace(delta, radius, TRUNCATION_GRID)
    budget: float = TAIL_SHARE * eps
    first, last = _tail_window(_relative_terms(log_weights, exponents, grid, log_kernel(grid)), budget)
    if last < first:
        raise NoConvergenceError(f"{kind} series has no terms above {budget:.1e} on [{delta}, {radius}]")

    weights: FloatArray = np.exp(log_weights[first: last + 1])
    taus: FloatArray = exponents[first: last + 1].copy()
    collapsed: int = 0
    if collapse_flat:
        kernel_at_radius: float = float(np.exp(log_kernel(np.array([radius])))[0])
        weights, taus, collapsed = _collapse_flat(weights, taus, radius, kernel_at_radius, budget)
        if collapsed:
            logger.debug("collapsed %d flat terms into one", collapsed)
    return KernelExpansion(
        dim=dim, kind=kind, step=step, first_index=int(indices[first]), last_index=int(indices[last]),
        weights=weights, exponents=taus, delta=delta, radius=radius, eps=eps, collapsed=collapsed, **extra,
    )


def _validated(build: Callable[[float], KernelExpansion], step: float, eps: float) -> KernelExpansion:
    """Rebuilds with a smaller step until the expansion is within 2 eps of the kernel."""
    for _ in range(MAX_STEP_REDUCTIONS + 1):
        expansion: KernelExpansion = build(step)
        error: float = expansion_validate(expansion)
        if error <= 2.0 * eps:
            logger.info("%s expansion in d=%d: %d terms on [%g, %g], step %.5f, error %.2e", expansion.kind,
                        expansion.dim, expansion.n_terms, expansion.delta, expansion.radius, step, error)
            return expansion
        logger.info("expansion error %.3e exceeds %.3e with step %.5f, reducing the step", error, 2.0 * eps, step)
        step *= STEP_REDUCTION
    raise NoConvergenceError(
        f"{expansion.kind} expansion on [{expansion.delta}, {expansion.radius}] stayed above {2.0 * eps:.1e} "
        f"after {MAX_STEP_REDUCTIONS} step reductions (error {error:.2e})"
    )


def _tail_limits(alpha: float, step: float, eps: float, delta: float, radius: float) -> Tuple[float, float]:
    """A window whose missing terms are far below eps; the tails are trimmed afterwards."""
    x_high: float = 2.0 * math.log(1.0 / eps) + 4.0 * alpha + 40.0
    t_high: float = math.log(x_high / delta**2)
    # Flat terms contribute at most h/Gamma(alpha/2) (tau R^2)^(alpha/2) relative to r^-alpha at R.
    log_x_low: float = (2.0 / alpha) * (math.log(eps * 1e-6) + gammaln(0.5 * alpha) - math.log(step))
    return log_x_low - 2.0 * math.log(radius), t_high


def inverse_power_expansion(alpha: float, eps: float, delta: float, radius: float, scale: float = 1.0,
                            dim: int = 3, kind: str = "inverse_power", collapse_flat: bool = False,
                            sharp: bool = True) -> KernelExpansion:
    """scale * r^-alpha = scale / Gamma(alpha/2) * integral of exp(-r^2 e^t + alpha t / 2) dt.

    With sharp=False the step comes from the a priori bound instead of the measured series error.
    """
    if not alpha > 0.0:
        raise InvalidRangeError(f"power exponent must be positive, got {alpha}")
    _check_range(delta, radius, eps)
    log_prefactor: float = math.log(scale) - gammaln(0.5 * alpha)

    def build(step: float) -> KernelExpansion:
        t_low, t_high = _tail_limits(alpha, step, eps, delta, radius)
        return _build(
            dim, kind, step, t_low, t_high,
            log_weight=lambda t: log_prefactor + 0.5 * alpha * t,
            log_exponent=lambda t: t,
            log_kernel=lambda r: math.log(scale) - alpha * np.log(r),
            delta=delta, radius=radius, eps=eps, collapse_flat=collapse_flat, alpha=alpha, scale=scale,
        )

    return _validated(build, sharp_step(alpha, eps) if sharp else step_size(alpha, eps), eps)


def power_kernel_expansion(d: int, eps: float, delta: float, R: float, collapse_flat: bool = True,
                           sharp: bool = True) -> KernelExpansion:
    """Expansion of the free-space Green's function C_d r^(2-d) of the Laplacian."""
    if d < 3:
        raise InvalidRangeError(f"the power kernel needs d >= 3, got {d}")
    return inverse_power_expansion(d - 2.0, eps, delta, R, scale=power_constant(d), dim=d, kind="power",
                                   collapse_flat=collapse_flat, sharp=sharp)


def helmholtz_kernel_expansion(d: int, k: float, eps: float, delta: float, R: float,
                               collapse_flat: bool = False, sharp: bool = True) -> KernelExpansion:
    """Expansion of the Green's function of -Laplace + k^2 from its heat-kernel integral."""
    if d < 3:
        raise InvalidRangeError(f"the Helmholtz expansion needs d >= 3, got {d}")
    if not k > 0.0:
        raise InvalidRangeError(f"wavenumber must be positive, got {k}")
    _check_range(delta, R, eps)
    alpha: float = d - 2.0
    x_high: float = 2.0 * math.log(1.0 / eps) + 4.0 * alpha + 40.0
    t_high: float = math.log(4.0 * x_high / delta**2)
    t_low: float = math.log(k * k / (x_high + 2.0 * k * R)) - 1.0
    log_prefactor: float = -0.5 * d * math.log(4.0 * math.pi)

    def build(step: float) -> KernelExpansion:
        return _build(
            d, "helmholtz", step, t_low, t_high,
            log_weight=lambda t: log_prefactor - k * k * np.exp(-t) + (0.5 * d - 1.0) * t,
            log_exponent=lambda t: t - math.log(4.0),
            log_kernel=lambda r: helmholtz_log_kernel(r, d, k),
            delta=delta, radius=R, eps=eps, collapse_flat=collapse_flat, wavenumber=k,
        )

    return _validated(build, helmholtz_step(d, k, eps, R, sharp), eps)


def expansion_eval(e: KernelExpansion, r: ArrayLike) -> FloatArray:
    radii: FloatArray = np.atleast_1d(np.asarray(r, dtype=np.float64))
    return np.sum(e.weights[None, :] * np.exp(-e.exponents[None, :] * radii[:, None] ** 2), axis=1)


def expansion_validate(e: KernelExpansion, grid_size: int = VALIDATION_GRID) -> float:
    """Max relative deviation from the exact kernel on a log grid over [delta, R]."""
    grid: FloatArray = np.geomspace(e.delta, e.radius, grid_size)
    if e.kind == "helmholtz":
        assert e.wavenumber is not None
        log_kernel: FloatArray = helmholtz_log_kernel(grid, e.dim, e.wavenumber)
        ratio: FloatArray = np.sum(
            _relative_terms(np.log(e.weights), e.exponents, grid, log_kernel), axis=1
        )
        return float(np.max(np.abs(ratio - 1.0)))
    return float(np.max(np.abs(expansion_eval(e, grid) / e.exact(grid) - 1.0)))
