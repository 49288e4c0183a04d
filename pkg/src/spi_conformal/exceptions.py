"""Exception hierarchy shared across the package."""


class SPIError(ValueError):
    """Base class for contract violations raised by this package."""


class DomainError(SPIError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(SPIError):
    """Inputs are individually valid but inconsistent with each other."""


class TieError(SPIError):
    """Scores that must be distinct contain ties.

    Break ties explicitly with :func:`spi_conformal.scores.jitter` before
    calling the operation again.
    """


class DegenerateFitError(SPIError):
    """A least-squares fit has no unique solution."""


class QuadratureError(SPIError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, abserr={error!r})")
        self.estimate = estimate
        self.error = error
