"""Exception types shared across the package.

Everything user-facing derives from :class:`SegvizError` so the CLI can
distinguish bad input (exit 1) from internal failures (exit 2).
"""


class SegvizError(Exception):
    """Base class for user-facing errors."""


class FormatError(SegvizError):
    """A document or binary payload does not conform to its format."""


class ValidationError(SegvizError):
    """An atlas document violates a structural invariant."""


class JoinError(SegvizError):
    """Statistics could not be joined to the atlas."""
