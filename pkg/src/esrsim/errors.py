"""Exception types shared across the package."""


class EsrSimError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(EsrSimError, ValueError):
    """An argument violates a documented precondition."""


class FieldDomainError(EsrSimError, ValueError):
    """A spatial evaluation point lies outside the model's validity region."""


class CrossingNotFoundError(EsrSimError):
    """A resonance-crossing search found no sign change in the given range."""


class AmbiguousCrossingError(EsrSimError):
    """A transition frequency is not monotonic over the search range.

    Carries every root found so the caller can disambiguate.
    """

    def __init__(self, message: str, roots_t: list[float]):
        super().__init__(message)
        self.roots_t = roots_t


class SolverFailureError(EsrSimError):
    """The ODE integrator failed; carries the time of the last good state."""

    def __init__(self, message: str, time_s: float):
        super().__init__(f"{message} (t = {time_s:.9g} s)")
        self.time_s = time_s


class FitFailureError(EsrSimError):
    """A least-squares fit did not converge; carries the last residuals."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ConfigError(EsrSimError, ValueError):
    """A run configuration failed validation."""
