from typing import Optional


class MixredError(Exception):
    pass


class NumericalError(MixredError, ArithmeticError):
    pass


class ConfigError(MixredError, ValueError):
    def __init__(self, message: str, field: Optional[str] = None) -> None:
        self.field: Optional[str] = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DimMismatchError(MixredError, ValueError):
    pass


class ThresholdOutOfRangeError(MixredError, ValueError):
    pass


class InvalidRangeError(MixredError, ValueError):
    pass


class ExpansionKindMismatchError(MixredError, ValueError):
    pass


class EmptyPointSetError(MixredError, ValueError):
    pass


class CoincidentSourceTargetError(MixredError, ValueError):
    pass


class NotSPDError(NumericalError):
    def __init__(self, pivot: int, message: Optional[str] = None) -> None:
        self.pivot: int = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot} is not positive)")


class SingularDiagonalError(NumericalError):
    def __init__(self, index: int) -> None:
        self.index: int = index
        super().__init__(f"triangular factor has a zero diagonal entry at {index}")


class NoConvergenceError(NumericalError):
    pass


class NumericalBreakdownError(NumericalError):
    pass


class NormUnderflowError(NumericalError):
    pass


class RankDeficientSamplingError(NumericalError):
    def __init__(self, samples: int, rank: int) -> None:
        self.samples: int = samples
        self.rank: int = rank
        self.suggested_samples: int = 2 * samples
        super().__init__(
            f"frequency sampling with {samples} samples saturated at rank {rank}; "
            f"retry with at least {self.suggested_samples} samples"
        )


class QuadratureNotConvergedError(NumericalError):
    pass


class MaxDepthExceededError(NumericalError):
    pass
