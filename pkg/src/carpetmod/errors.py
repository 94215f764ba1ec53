"""Exception hierarchy shared by every module."""


class CarpetError(Exception):
    """Base class for all package errors."""


class ConstraintViolation(CarpetError, ValueError):
    """A carpet parameter set fails one of its defining inequalities."""


class BudgetExceeded(CarpetError):
    """A computation would exceed the configured size or path budget."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class InvalidPair(CarpetError, ValueError):
    pass


class NotAHole(CarpetError, ValueError):
    pass


class LevelMismatch(CarpetError, ValueError):
    pass


class UnmappedCircle(CarpetError):
    pass


class SolverError(CarpetError):
    """Base for failures raised by the modulus solvers.

    ``report`` carries whatever partial result was available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoPath(SolverError):
    pass


class IterationLimit(SolverError):
    pass


class TieAmbiguity(CarpetError):
    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values


class AssertionFailed(CarpetError):
    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending or []
