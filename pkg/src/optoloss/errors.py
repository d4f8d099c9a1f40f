"""Exception types shared across the package."""


class OptolossError(Exception):
    """Base class for all package errors."""


class InputDomainError(OptolossError, ValueError):
    """A physical parameter is outside its admissible domain."""


class ConvergenceError(OptolossError):
    """A quadrature or iteration failed to reach the requested tolerance.

    Carries the best value obtained and the achieved error estimate so
    callers can decide whether the partial result is still usable.
    """

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class TruncationError(OptolossError):
    """A Fock-space cutoff is too small for the requested state.

    ``required`` holds an estimate of the cutoff that would suffice.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class LeakageError(TruncationError):
    """Population leaked into the top Fock levels during time evolution."""


class MemoryBudgetError(OptolossError):
    """A dense superoperator would exceed the configured memory budget."""


class GridCoverageError(OptolossError):
    """A phase-space grid does not cover the state it is asked to sample."""
