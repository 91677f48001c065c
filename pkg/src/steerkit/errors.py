"""Exception types shared across the package."""


class SteerkitError(Exception):
    """Base class for all errors raised by steerkit."""


class DimensionError(SteerkitError, ValueError):
    """Operand shapes or dimensions are inconsistent or out of range."""


class UnsupportedDimension(SteerkitError, ValueError):
    """The requested dimension is valid but no construction is implemented."""


class InvalidOperator(SteerkitError, ValueError):
    """A matrix violates a required property (Hermitian, PSD, unit trace, ...)."""


class InvalidAssemblage(SteerkitError, ValueError):
    """An assemblage or measurement fails its validation checks."""


class TooManyStrategies(SteerkitError):
    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} deterministic strategies exceeds the cap of {cap}")


class SolverError(SteerkitError, RuntimeError):
    """The SDP solver did not return a certified optimum."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
