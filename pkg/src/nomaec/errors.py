"""Exception types shared across the package."""

from __future__ import annotations


class NomaEcError(Exception):
    """Base class for all package errors."""


class DomainError(NomaEcError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class UnsupportedDomainError(DomainError):
    """The operation is defined, but not by this evaluation route.

    Raised e.g. by the strong-user closed form for a non-integer exponent;
    the message names the route that does support the input.
    """


class AccuracyFailure(NomaEcError, ArithmeticError):
    """A numerical routine could not meet its accuracy target.

    Attributes:
        estimate: best value obtained before giving up (may be nan).
        error_bound: estimated absolute error of ``estimate``.
    """

    def __init__(self, message: str, estimate: float = float("nan"), error_bound: float = float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
