"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
BackendError -> 3.
"""


class TailqaError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TailqaError):
    """Invalid configuration or usage (exit code 1)."""


class DataError(TailqaError):
    """Malformed or inconsistent input data (exit code 2)."""


class BackendError(TailqaError):
    """A remote completion/embedding backend failed (exit code 3)."""
