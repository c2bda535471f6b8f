"""Exception types shared across the package."""


class CsdpError(Exception):
    """Base class for all library errors."""


class ConfigError(CsdpError, ValueError):
    """Wiring shapes, resistances, or run settings are inconsistent."""


class InputError(CsdpError, ValueError):
    """User-supplied data violates a documented precondition."""


class UsageError(CsdpError, RuntimeError):
    """An operation was invoked in a mode it does not support."""


class NumericError(CsdpError, ArithmeticError):
    """Simulation state became non-finite."""


class DataFormatError(CsdpError, ValueError):
    """A dataset or checkpoint file is malformed."""
