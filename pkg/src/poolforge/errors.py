"""Exception hierarchy shared across the toolkit."""


class PoolforgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PoolforgeError):
    """Invalid configuration value or combination."""


class ParseError(PoolforgeError):
    """Malformed input file; carries the offending location."""

    def __init__(self, message, path=None, line_no=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line_no is not None:
                loc += f":{line_no}"
            loc += ": "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line_no = line_no


class NotFoundError(PoolforgeError):
    """Requested topic, document, or session does not exist."""


class ImbalanceError(PoolforgeError):
    """Training data contains a single class and cannot be rebalanced."""


class NumericError(PoolforgeError):
    """Optimization produced a non-finite value."""


class DomainError(PoolforgeError):
    """Argument outside the mathematical domain of an operation."""


class UndefinedMetricError(PoolforgeError):
    """Metric is undefined for the given input (e.g. no relevant docs)."""


class EmptyResultError(PoolforgeError):
    """Every topic was discarded; nothing to aggregate."""


class ConflictError(PoolforgeError):
    """Operation not valid in the current session phase."""


class ValidationError(PoolforgeError):
    """Submitted payload violates session state constraints."""
