"""Exception types shared across the simulator."""


class MiseSimError(Exception):
    """Base class for all errors raised by misesim."""


class ConfigurationError(MiseSimError, ValueError):
    """Invalid simulator, workload or policy configuration."""


class EstimateUnavailable(MiseSimError, ArithmeticError):
    """An estimator had no usable denominator for this interval."""


class InsufficientData(MiseSimError):
    """Not enough simulated history to answer the query."""


class UndefinedSlowdown(MiseSimError, ArithmeticError):
    """Slowdown requested for an app that made no progress."""


class TraceParseError(MiseSimError, ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceRangeError(TraceParseError):
    """Address or gap field does not fit the trace format."""
