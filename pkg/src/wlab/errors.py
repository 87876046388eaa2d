"""Exception types shared across the toolkit."""

from __future__ import annotations


class WlabError(Exception):
    """Base class for all toolkit errors."""


class GridError(WlabError):
    """Invalid time grid, or grids that do not match where they must."""


class ParameterError(WlabError):
    """Process or law parameters outside their domain."""


class DomainError(WlabError):
    """Function argument outside the mathematical domain of the operation."""


class ShapeError(WlabError):
    """Mismatched array or ensemble shapes."""


class DegenerateInputError(WlabError):
    """Input that makes a statistical test meaningless (e.g. empty sample)."""


class ValidationError(WlabError):
    """Input data fails a structural validation check."""


class NumericError(WlabError):
    """Numerical routine failed to meet its tolerance.

    Carries the best estimate obtained and the error actually achieved so
    callers can decide whether the partial result is still useful.
    """

    def __init__(self, message: str, estimate: float | None = None,
                 achieved_tol: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved_tol = achieved_tol


class TruncationError(WlabError):
    """A path construction ran out of horizon before finishing.

    ``partial_path`` holds the valid prefix that was built; for the glued
    Bessel construction this is the whole pre-hitting Brownian segment,
    which is still exact in law on the simulated window.
    """

    def __init__(self, message: str, partial_path=None, u: float | None = None,
                 m: float | None = None):
        super().__init__(message)
        self.partial_path = partial_path
        self.u = u
        self.m = m
