"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where the quantity is defined."""


class DegeneracyError(ValueError):
    pass


class IntegrationError(RuntimeError):
    """The adaptive propagator could not reach the requested accuracy."""

    def __init__(self, message, k=None, t=None):
        super().__init__(message)
        self.k = k
        self.t = t


class FitError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConditioningError(RuntimeError):
    pass
