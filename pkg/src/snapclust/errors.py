"""Exception hierarchy shared by the library and the CLI.

Each subclass carries the process exit code the CLI maps it to.
"""


class SnapclustError(Exception):
    """Base class for all snapclust errors."""

    exit_code = 1


class ConfigError(SnapclustError):
    """Invalid configuration: bad field value, unknown key, malformed config file."""

    exit_code = 2


class DataError(SnapclustError):
    """Invalid input data: bad magic, truncated file, malformed matrix."""

    exit_code = 3


class NumericalError(SnapclustError):
    """Numerical failure: training divergence, rank deficiency, kernel underflow."""

    exit_code = 4
