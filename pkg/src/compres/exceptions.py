"""Exception types raised by the package."""


class DimensionError(ValueError):
    """Vector or matrix shapes are inconsistent."""


class DegenerateOperatorError(ValueError):
    """The linear map is identically zero where a nonzero one is required."""


class UnsupportedOperatorError(TypeError):
    """The operator lacks the structure an algorithm needs."""


class ConvergenceError(RuntimeError):
    """An inner iterative solve failed to converge."""
