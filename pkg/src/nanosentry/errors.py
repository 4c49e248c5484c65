"""Exception hierarchy shared across the package."""


class NanosentryError(Exception):
    """Base class for all package errors."""


class QuadratureError(NanosentryError):
    """Adaptive quadrature could not meet its tolerance."""


class DegenerateVarianceError(NanosentryError):
    """The alternative variance does not exceed the null variance (no-signal link)."""


class NegativeDiscriminantError(NanosentryError):
    """The LRT quadratic has no real crossing above the prior odds."""


class ConfigError(NanosentryError):
    """Malformed or invalid scenario configuration."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class SimulationError(NanosentryError):
    """Monte Carlo estimate is undefined (e.g. no trials of one truth class)."""
