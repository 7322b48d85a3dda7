"""Exception types raised by the integrators and the stability laboratory."""


class InvalidInputError(ValueError):
    """An argument is outside the domain an operation accepts."""


class NumericOverflowError(ArithmeticError):
    """Chebyshev values overflowed while building a tableau."""


class BlowUpError(FloatingPointError):
    """A stage of a time step produced non-finite values.

    ``stage`` is the index of the failing stage (``None`` if unknown) and
    ``t`` the start time of the step; ``integrate`` fills in ``t``.
    """

    def __init__(self, message, stage=None, t=None):
        super().__init__(message)
        self.stage = stage
        self.t = t


class EstimationFailedError(RuntimeError):
    """The power method hit a non-finite right-hand side value."""


class PreconditionError(ValueError):
    """A scan was requested outside the region its claim covers.

    The message names the violated inequality.
    """


class UnsupportedCaseError(ValueError):
    """The requested computation is only defined for a narrower class of inputs."""
