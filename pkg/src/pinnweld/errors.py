"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (shapes, ranges, missing files)."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class NumericError(ArithmeticError):
    """Non-finite values encountered during evaluation or training."""


class SingularFitError(DataError):
    """Least-squares problem without a unique solution."""


class SolverError(NumericError):
    """Finite-difference solver diverged."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class DomainError(ValueError):
    """Argument outside the interval where a function is defined."""
