"""Exception types shared across the package."""


class MentionVecError(Exception):
    """Base class for all package-specific errors."""


class StoreFormatError(MentionVecError):
    """A mention-store file is malformed; the message names the offending field."""


class EvaluationError(MentionVecError):
    """An evaluation cannot produce a result (e.g. insufficient benchmark coverage)."""
