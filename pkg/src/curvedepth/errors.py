"""Exception types shared across the package."""


class CurveDepthError(Exception):
    """Base class for errors raised by this package."""


class ParseError(CurveDepthError, ValueError):
    """A text input (CSV) could not be parsed; message names row/column."""


class FormatError(CurveDepthError, ValueError):
    """A binary input is malformed (bad magic, truncated payload, bad dims)."""


class GridMismatchError(CurveDepthError, ValueError):
    """Two curves that must share a grid do not."""


class ConfigurationError(CurveDepthError, ValueError):
    """Inconsistent parameters, e.g. a zero depth denominator or a metric
    mismatch between a center solution and a query."""


class EmptySetError(CurveDepthError, ValueError):
    """An operation that requires a nonempty selection received none."""


class UndefinedCorrelationError(CurveDepthError, ValueError):
    """Correlation requested on fewer than two points or zero variance."""
