"""Exception hierarchy. Each class carries the CLI exit code for its category."""

from __future__ import annotations


class MeasEngineError(Exception):
    exit_code = 1


class InvalidArgument(MeasEngineError, ValueError):
    exit_code = 2


class InvalidConfiguration(InvalidArgument):
    pass


class ConfigError(InvalidArgument):
    """Scenario file problem; ``key_path`` is ``section.key`` when known."""

    def __init__(self, message: str, key_path: str | None = None):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class UndefinedGain(InvalidArgument):
    pass


class CycleRangeError(MeasEngineError, IndexError):
    exit_code = 2


class DataFormatError(MeasEngineError, ValueError):
    exit_code = 3


class FitError(MeasEngineError, RuntimeError):
    exit_code = 4


class NonIdentifiable(FitError):
    def __init__(self, message: str, landscape=None):
        self.landscape = landscape
        super().__init__(message)


class ResetFailure(MeasEngineError, RuntimeError):
    """Active reset did not herald the ground state within the iteration budget."""

    exit_code = 5

    def __init__(self, message: str, last_state=None):
        self.last_state = last_state
        super().__init__(message)


class OutputError(MeasEngineError, OSError):
    """Output directory or file could not be written."""

    exit_code = 6
