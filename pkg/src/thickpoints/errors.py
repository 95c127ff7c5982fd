"""Exception types shared across the package."""


class RegimeError(ValueError):
    """Parameters fall outside the validity regime of the requested bound
    or experiment.  Raised instead of silently clamping."""


class PreconditionError(ValueError):
    """An operation's stated precondition is violated.  Distinct from a
    legitimate negative result."""


class TruncationError(RuntimeError):
    """A dynamic-programming state-space truncation could not be certified
    to the requested tolerance.  Carries the achieved bound."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResolutionError(RuntimeError):
    """A discretised path was too coarse for the requested statistic and
    the violation budget was exceeded."""
