"""Exception roots shared by the library and the command-line front end.

The CLI maps :class:`ConfigError` to exit code 1, :class:`NumericalError` to
exit code 2 and :class:`OSError` (including :class:`GridFormatError`) to 3.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent input parameters.

    Parameters
    ----------
    message : str
    line : int, optional
        1-based line of the offending entry in a config file.
    """

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NumericalError(ValueError):
    """A computation left its domain of validity or failed to converge."""


class GridFormatError(OSError):
    """Malformed or unsupported binary grid file."""
