"""Exception hierarchy for the engine.

Two broad failure families map onto CLI exit codes: anything rooted at
:class:`ValidationError` exits with 1, provider and store-file failures
(:class:`ProviderError`, :class:`StoreIOError`) exit with 2.
"""

from __future__ import annotations


class CosetxError(Exception):
    """Base class for all engine errors."""


class ValidationError(CosetxError):
    """Input, configuration, or invariant violation."""


class DimensionMismatchError(ValidationError):
    """A vector's dimension disagrees with the store or its peer."""


class DuplicateEntryError(ValidationError):
    """An insert collides with an existing (key, provenance) entry or member id."""


class MissingEmbeddingError(ValidationError):
    """A required (key, provenance) entry is absent from the store."""


class ProviderError(CosetxError):
    """The embedding provider is unreachable or returned malformed output."""


class StoreIOError(CosetxError):
    """A store file is truncated, corrupt, or dimensionally inconsistent."""
