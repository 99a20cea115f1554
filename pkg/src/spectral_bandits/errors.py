"""Exception hierarchy shared by every module of the package."""


class SpectralBanditsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(SpectralBanditsError, ValueError):
    """A parameter is outside the documented range of an operation."""


class ValidationError(InvalidArgument):
    """A constructed object would violate its invariants."""


class ParseError(SpectralBanditsError, ValueError):
    """A text file could not be parsed.

    ``lineno`` is 1-based and refers to the physical line in the source.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NumericalError(SpectralBanditsError, ArithmeticError):
    """A numerical routine failed to converge or produced unusable output."""


class ConfigError(SpectralBanditsError):
    """An experiment configuration is malformed or inconsistent."""
