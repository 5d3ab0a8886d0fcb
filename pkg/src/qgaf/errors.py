"""Exception types shared across the toolkit."""

from __future__ import annotations


class QgafError(Exception):
    """Base class for all toolkit errors."""


class DomainError(QgafError, ValueError):
    """An argument fell outside a function's domain (or escaped a range)."""

    def __init__(self, message: str, x=None):
        super().__init__(message)
        self.x = x


class NonFiniteError(QgafError, ArithmeticError):
    """An evaluation produced a NaN or infinite value."""

    def __init__(self, message: str, x=None):
        super().__init__(message)
        self.x = x


class BracketError(QgafError, ValueError):
    """A root or inverse could not be bracketed."""


class MonotonicityError(QgafError, ValueError):
    """Samples contradict a declared strict monotonicity."""


class ConeViolation(QgafError, ValueError):
    """A function left the bow-tie cone where membership was required."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class AbelError(QgafError, RuntimeError):
    """The Abel conjugacy could not be built or evaluated."""


class SpecError(QgafError, ValueError):
    """A JSON function, grid, or periodic spec is malformed."""


class EvaluationError(QgafError, RuntimeError):
    """A residual could not be evaluated at some grid point."""

    def __init__(self, message: str, x: float | None = None, expression: str | None = None):
        super().__init__(message)
        self.x = x
        self.expression = expression
