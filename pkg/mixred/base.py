from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List

import numpy as np
from numpy.typing import NDArray


FloatArray = NDArray[np.float64]
IndexArray = NDArray[np.intp]


class InnerProductFamily(ABC):
    """N unit-norm elements exposing their pairwise inner products.

    Implementations only ever need to produce single Gram columns; the reduction
    algorithms never ask for the full N x N matrix.
    """

    workers: int = 1

    @property
    @abstractmethod
    def size(self) -> int:
        pass

    @abstractmethod
    def _column_slice(self, j: int, rows: slice) -> FloatArray:
        pass

    def column(self, j: int) -> FloatArray:
        return fill_in_chunks(lambda rows: self._column_slice(j, rows), self.size, self.workers)

    def inner(self, i: int, j: int) -> float:
        return float(self._column_slice(j, slice(i, i + 1))[0])

    def diagonal(self) -> FloatArray:
        return np.ones(self.size)


MIN_CHUNK: int = 4096


def fill_in_chunks(fill: Callable[[slice], FloatArray], n: int, workers: int) -> FloatArray:
    # Every entry is produced by elementwise code, so chunking never changes a value.
    if workers <= 1 or n < 2 * MIN_CHUNK:
        return fill(slice(0, n))
    step: int = max(MIN_CHUNK, -(-n // workers))
    slices: List[slice] = [slice(start, min(start + step, n)) for start in range(0, n, step)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts: List[FloatArray] = list(pool.map(fill, slices))
    return np.concatenate(parts)


def gram_matrix(family: InnerProductFamily) -> FloatArray:
    """Materializes the full Gram matrix. Only meant for small oracle checks."""
    n: int = family.size
    gram: FloatArray = np.empty((n, n))
    for j in range(n):
        gram[:, j] = family.column(j)
    return gram
