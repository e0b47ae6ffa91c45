"""Exception types shared across the package."""


class FracvolError(Exception):
    """Base class for all errors raised by fracvol."""


class ParameterError(FracvolError, ValueError):
    """A parameter is outside its admissible domain."""


class InsufficientDataError(FracvolError):
    """A series is too short (or a lag grid too sparse) for the requested estimate."""


class GenerationError(FracvolError):
    """Random-path generation failed; the message names the method that failed."""


class GridMismatchError(FracvolError):
    """The simulation step and the volatility observation scale do not align."""


class OutOfRegimeError(FracvolError):
    """An asymptotic formula was evaluated outside its validity regime."""


class NoSolutionError(FracvolError):
    """A root-finding problem has no solution in the admissible bracket."""


class IngestionError(FracvolError):
    """A data file failed validation.

    ``lines`` holds up to the first 10 offending (line_number, message) pairs.
    """

    def __init__(self, message, lines=None):
        super().__init__(message)
        self.lines = list(lines or [])
