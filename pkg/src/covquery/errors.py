"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
SolverLimitError -> 3.
"""


class CovQueryError(Exception):
    """Base class for package errors."""


class ConfigError(CovQueryError):
    """Invalid configuration or usage."""


class DataError(CovQueryError):
    """Unusable input data (unreadable file, degenerate corpus, empty feature set)."""


class SolverLimitError(CovQueryError):
    """Exact solver refused an instance that exceeds its search limits."""
