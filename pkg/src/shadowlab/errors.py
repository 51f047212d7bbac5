"""Exception types shared across the package."""

from __future__ import annotations


class ShadowlabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(ShadowlabError, ValueError):
    """A parameter is outside its documented range."""


class RangeError(ShadowlabError, ValueError):
    """An index or symbol is outside the valid range."""


class DomainError(ShadowlabError, ValueError):
    """A point is outside the phase space, or a map leaves it."""


class IntegrityError(ShadowlabError):
    """A serialized artifact failed its embedded consistency check."""


class PreconditionError(ShadowlabError):
    """An operation's precondition verdict failed.

    Carries the classification witness so callers can report why the
    input was rejected.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class ResourceCapError(ShadowlabError):
    """A computation would exceed a configured resource cap."""

    def __init__(self, message: str, required_cap: int):
        super().__init__(message)
        self.required_cap = required_cap
