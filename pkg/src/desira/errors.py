"""Exception types raised across the package."""


class DesiraError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DesiraError, ValueError):
    """Raised for invalid parameters or non-finite inputs."""


class UnknownCategoryError(DesiraError, KeyError):
    """Raised when a categorical desirability sees an unmapped label."""


class ShapeError(DesiraError, ValueError):
    """Raised when array shapes or column counts do not match."""


class ZeroDistanceError(DesiraError, ValueError):
    """Raised when a sampling plan contains coincident points."""


class FitError(DesiraError, RuntimeError):
    """Raised when a surrogate model cannot be fitted."""


class ConfigError(DesiraError, ValueError):
    """Raised for malformed or unresolvable configuration."""
