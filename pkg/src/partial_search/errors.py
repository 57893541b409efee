"""Exception hierarchy shared by every module."""


class PartialSearchError(Exception):
    """Base class for all errors raised by this package."""


class ProblemError(PartialSearchError, ValueError):
    """Invalid problem parameters (non-positive sizes, tau out of range, ...)."""


class RegimeError(ProblemError):
    """The instance lies outside the regime an operation is valid for."""


class NoRootError(PartialSearchError, ArithmeticError):
    """A bracketed root search found no sign change."""

    def __init__(self, message, brackets=()):
        super().__init__(message)
        self.brackets = tuple(brackets)


class ResourceError(PartialSearchError):
    """A configured size cap would be exceeded."""


class SymmetryError(PartialSearchError):
    """Amplitude class equality was violated; indicates a simulator bug."""
