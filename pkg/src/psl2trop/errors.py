"""Exception types shared across the package."""


class PrecisionError(ArithmeticError):
    """Raised when truncated series do not carry enough guaranteed terms
    to decide a question (a leading term, a Newton slope, a cancellation).
    """


class SeriesParseError(ValueError):
    """Syntax error in a series string; ``offset`` is the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class GenericityError(ValueError):
    """A surface family fails one of the genericity checks."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CommonFactorError(ValueError):
    """Two bidegree curves share a component."""


class ClusteringError(ArithmeticError):
    """Numerically found roots could not be grouped unambiguously."""
