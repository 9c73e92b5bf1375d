"""Exception types shared across the package."""


class PossimError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(PossimError):
    """Observed-data input is malformed or inconsistent with the model."""


class CapabilityError(PossimError):
    """The requested operation is not available for this model.

    Raised e.g. when an exact contour evaluator is requested for a model
    that only supports Monte Carlo calibration.
    """


class ResolutionError(PossimError):
    """A set query cannot be resolved against the contour grid.

    Raised when a hypothesis contains no grid point and the contour has
    no exact evaluator to fall back on; silently returning 0 would be
    wrong.
    """
