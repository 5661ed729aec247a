"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, RangeError -> 3.
"""


class DataError(ValueError):
    """Input records or files are malformed, inconsistent or missing."""


class RangeError(ValueError):
    """A query or target lies outside what the data can answer."""
