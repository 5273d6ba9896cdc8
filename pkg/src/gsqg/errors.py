"""Exception hierarchy shared by the simulator, the certifier and the CLI."""


class GsqgError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(GsqgError, ValueError):
    """A parameter lies outside the domain an operation is defined on.

    The CLI maps this family (domain, scope and validation failures) to
    exit code 1.
    """


class NumericalError(GsqgError, ArithmeticError):
    """A computation started but failed numerically (exit code 2)."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach its tolerance.

    ``partial`` holds the best available estimate and ``error`` its
    (unconverged) error estimate.
    """

    def __init__(self, message, partial=None, error=None):
        super().__init__(message)
        self.partial = partial
        self.error = error


class CFLViolation(NumericalError):
    """Refused time step: ``dt * max|u|`` exceeds ``cfl_safety * dx``."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class BlowUpError(NumericalError):
    """NaN or a gradient above the configured ceiling was detected."""

    def __init__(self, message, step=None, diagnostic=None):
        super().__init__(message)
        self.step = step
        self.diagnostic = diagnostic or {}
