"""Exception types raised across the package."""


class RichardsonError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RichardsonError, ValueError):
    pass


class InvalidConfigError(RichardsonError, ValueError):
    pass


class InvalidChannelError(RichardsonError, ValueError):
    pass


class InvalidRateError(RichardsonError, ValueError):
    pass


class CapacityError(RichardsonError):
    """Problem size exceeds what an exact computation is allowed to enumerate."""


class GraphParseError(RichardsonError, ValueError):
    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
