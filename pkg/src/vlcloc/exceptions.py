"""Error classes raised across the package."""


class VLCLocError(Exception):
    """Base class for all package errors."""


class DomainError(VLCLocError, ValueError):
    """Input outside the mathematical domain (e.g. receiver coincides with an LED)."""


class ConfigError(VLCLocError, ValueError):
    """Invalid configuration value."""


class InputError(VLCLocError, ValueError):
    """Observation data inconsistent with the scene."""


class NoAnchorsError(VLCLocError):
    """No VAP produced a usable (positive) observation."""


class InsufficientAnchorsError(VLCLocError):
    """Fewer direction lines than needed for a 3D solve."""


class NoContourError(VLCLocError, ValueError):
    """Requested height does not intersect the iso-RSS contour."""


class SingularityError(VLCLocError, ZeroDivisionError):
    """Evaluation at a pole of the auxiliary function."""
