"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConfigurationError(ValueError):
    """Inconsistent or missing parameters for a family, regime or run."""


class ResourceError(RuntimeError):
    """A requested computation exceeds the configured size limits."""


class NumericalBreakdown(ArithmeticError):
    """A factorization hit an exactly zero pivot."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class FitError(ValueError):
    """The regression design is degenerate."""
