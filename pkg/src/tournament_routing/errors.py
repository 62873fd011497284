"""Exception types shared across the package."""

from __future__ import annotations


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class EmptyInputError(ValueError):
    """An aggregate was requested over an empty collection."""


class FitDomainError(ValueError):
    """Data cannot be linearised for the requested fit."""


class InsufficientDataError(ValueError):
    """Too few usable points for a fit."""


class BoundViolationError(RuntimeError):
    """A measured value exceeds the bound that should dominate it."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration failed to settle.

    The last iterate is kept on ``last_iterate`` so callers can inspect it.
    """

    def __init__(self, message: str, last_iterate: float):
        super().__init__(message)
        self.last_iterate = last_iterate
