from typing import List

from .errors import ConfigError, MixredError, NumericalError
from .gaussian_core import CovKind, GaussianAtom, GaussianFamily, Mixture, make_atom, mixture_eval
from .radial_kernels import KernelExpansion, helmholtz_kernel_expansion, power_kernel_expansion
from .reduction import ReductionResult, cholesky_reduce, mgs_reduce, reduce_mixture

__version__: str = "0.1.0"

__all__: List[str] = [
    'ConfigError', 'CovKind', 'GaussianAtom', 'GaussianFamily', 'KernelExpansion', 'MixredError', 'Mixture',
    'NumericalError', 'ReductionResult', 'cholesky_reduce', 'helmholtz_kernel_expansion', 'make_atom',
    'mgs_reduce', 'mixture_eval', 'power_kernel_expansion', 'reduce_mixture',
]
