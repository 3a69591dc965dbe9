"""Exception types shared across the package."""


class HardyLabError(Exception):
    """Base class for all package errors."""


class DomainError(HardyLabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ConvergenceError(HardyLabError, RuntimeError):
    """A numerical procedure did not reach its accuracy target."""


class ConfigError(HardyLabError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class NotPositiveDefiniteError(HardyLabError, ValueError):
    """Cholesky factorization met a non-positive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot} has value {value:.6g}"
        )
