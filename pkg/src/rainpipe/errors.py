"""Exception hierarchy. The CLI maps each family to an exit code."""


class RainpipeError(Exception):
    exit_code = 1


class ConfigError(RainpipeError, ValueError):
    """Invalid experiment configuration or hyperparameters."""

    exit_code = 2


class DataError(RainpipeError, ValueError):
    """Unreadable, malformed or unusable input data."""

    exit_code = 3


class LeakageError(ConfigError):
    """A target-derived column was requested as a model feature."""


class NumericError(RainpipeError, ArithmeticError):
    """A fit diverged or produced non-finite values."""

    exit_code = 4
