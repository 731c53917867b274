"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid argument, configuration or input data."""


class ProfileFormatError(ValidationError):
    """Malformed measurement-profile file; message carries the line number."""


class SolverError(RuntimeError):
    """Numerical solver failed (breakdown, loss of definiteness, ...)."""


class ConvergenceError(SolverError):
    """Iterative solver did not reach the requested tolerance within its cap."""
