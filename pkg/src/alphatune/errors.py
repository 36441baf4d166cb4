"""Exception hierarchy shared by every module."""


class AlphaTuneError(Exception):
    """Base class for library errors."""


class ValidationError(AlphaTuneError, ValueError):
    """Input violates a documented precondition."""


class ConfigError(ValidationError):
    """Invalid configuration values."""


class FormatError(ValidationError):
    """A data or model file could not be parsed.

    ``line`` holds the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
