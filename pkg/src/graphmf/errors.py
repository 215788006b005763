"""Exception types shared across the package."""


class GraphMFError(Exception):
    """Base class for all package errors."""


class InputError(GraphMFError, ValueError):
    """Invalid argument: bad dimensions, indices out of range, bad values."""


class DataFormatError(GraphMFError, ValueError):
    """Malformed or inconsistent input file (parse errors, duplicates)."""


class NumericalError(GraphMFError, ArithmeticError):
    """Numerical breakdown: non-finite intermediates, non-positive pivots."""


class ConfigError(GraphMFError, ValueError):
    """Inconsistent or incomplete run configuration."""
