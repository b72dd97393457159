"""Exception hierarchy shared by every module."""


class NavierBlowupError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(NavierBlowupError, ValueError):
    pass


class DomainError(NavierBlowupError, ValueError):
    """A point lies outside the domain, or parameters leave the admissible set."""


class SingularityError(NavierBlowupError, ValueError):
    """Evaluation requested exactly at a kernel singularity."""


class DivergentIntegralError(NavierBlowupError, ArithmeticError):
    pass


class AccuracyError(NavierBlowupError, ArithmeticError):
    """An internal error estimate exceeded the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class BlowUpError(NavierBlowupError, ArithmeticError):
    def __init__(self, message, radius):
        super().__init__(message)
        self.radius = radius


class NoConvergenceError(NavierBlowupError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PositivityViolationError(NavierBlowupError, RuntimeError):
    pass


class TrivialSolutionError(NavierBlowupError, RuntimeError):
    """Shooting collapsed onto the zero solution."""


class FitError(NoConvergenceError):
    pass


class PreconditionError(NavierBlowupError, RuntimeError):
    pass
