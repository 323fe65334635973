"""Exception hierarchy shared across the package."""


class ActiveCDError(Exception):
    """Base class for all package errors."""


class ParameterError(ActiveCDError, ValueError):
    """Invalid model or run parameters."""


class DimensionError(ActiveCDError, ValueError):
    """Array shapes do not agree."""


class EstimationError(ActiveCDError):
    """Not enough labeled pairs to estimate p and q, and no fallback given."""


class DataError(ActiveCDError):
    """Malformed or inconsistent input files."""


class ParseError(DataError):
    def __init__(self, path, lineno, msg):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class LabelRangeError(DataError):
    pass


class MissingLabelError(DataError):
    pass


class SizeCapError(ActiveCDError):
    """Exhaustive enumeration would exceed the configured work cap."""


class StateError(ActiveCDError):
    """Operation called in a state where it is not defined."""


class DataWarning(UserWarning):
    """Recoverable oddities in ingested data (duplicates, self-loops)."""
