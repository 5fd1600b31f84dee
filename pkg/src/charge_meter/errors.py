from __future__ import annotations


class NumericalFailure(ArithmeticError):
    """Base for failures of a numerical procedure on valid input."""


class CancellationError(NumericalFailure):
    """A signed combination lost too many significant digits."""


class SingularPivotError(NumericalFailure):
    """Elimination hit a pivot too small to divide by."""


class ConvergenceError(NumericalFailure):
    """An iteration did not reach its tolerance within the allowed budget."""


class ConsistencyError(NumericalFailure):
    """Two routes to the same quantity disagree beyond tolerance."""
