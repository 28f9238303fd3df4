"""Exception types shared across the toolkit.

The split mirrors how the CLI maps failures to exit codes: malformed input
(config files, trace files, out-of-range values) is a usage error, while
engineering verdicts such as an infeasible recharge or a brown-out are
ordinary results and never raised past the simulation layer.
"""


class HesskitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(HesskitError):
    """An input value violates a documented precondition."""


class TraceFormatError(HesskitError):
    """A trace CSV file does not match the documented shape."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsegmentableError(HesskitError):
    """A trace has too few distinct levels to split into phases.

    Carries the level histogram (level -> sample count) so callers can see
    what the segmenter found.
    """

    def __init__(self, message: str, histogram: dict[float, int]):
        super().__init__(message)
        self.histogram = histogram


class ConfigError(HesskitError):
    """A run-config document is malformed or contains unknown keys."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class SizingError(HesskitError):
    """The sizing pipeline was given nothing it can size."""


class BrownOutError(HesskitError):
    """Simulated storage voltage fell below the transceiver operating floor.

    Carries the simulation time of the event and the partial result up to
    that instant; the CLI reports this as a flagged result, not a failure.
    """

    def __init__(self, time_s: float, voltage_v: float, result=None):
        super().__init__(
            f"brown-out at t={time_s * 1e6:.3f} us: storage voltage "
            f"{voltage_v:.4f} V below operating floor"
        )
        self.time_s = time_s
        self.voltage_v = voltage_v
        self.result = result
