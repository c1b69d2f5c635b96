"""Exception types raised by the library.

Everything derives from :class:`TrendbootError` so callers can catch the
library's failures with a single except clause; the subclasses mirror the
distinct failure modes of the input data rather than the code path that
detected them.
"""


class TrendbootError(Exception):
    """Base class for all errors raised by this package."""


class InsufficientDataError(TrendbootError, ValueError):
    """Too few usable observations for the requested estimate."""


class CoverageError(TrendbootError, ValueError):
    """A required date range or day-of-year band is not covered by the data."""


class DegenerateVarianceError(TrendbootError, ValueError):
    """A variance that must be strictly positive collapsed to zero."""


class CollinearityError(TrendbootError, ValueError):
    """A regressor is constant (or otherwise rank deficient) on the overlap."""


class ParseError(TrendbootError, ValueError):
    """A CSV row could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class IntegrityError(TrendbootError, ValueError):
    """Structurally invalid input (duplicate keys, inconsistent coordinates)."""


class DegenerateComponentError(TrendbootError, ValueError):
    """A mixture component collapsed onto too few points to be estimable."""
