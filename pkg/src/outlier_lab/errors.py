"""Exception types shared across modules."""


class OutlierLabError(Exception):
    """Base class."""


class InvalidArgumentError(OutlierLabError, ValueError):
    """Malformed input (wrong type, bad size, inconsistent flags)."""


class DomainError(OutlierLabError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class ModelInapplicableError(DomainError):
    """The requested model does not apply at these parameters (e.g. gamma <= 1)."""


class SolverFailure(OutlierLabError, RuntimeError):
    """Eigensolver did not converge."""

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations
