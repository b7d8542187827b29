"""Exception hierarchy shared by all scanstat3d modules."""


class ScanStatError(Exception):
    """Base class for all scanstat3d errors."""


class ParameterError(ScanStatError, ValueError):
    """Invalid distribution or algorithm parameters."""


class GeometryError(ParameterError):
    """Region/window dimensions violate the scan geometry requirements."""


class EmptySupportError(ScanStatError):
    """A truncated distribution has zero mass at or above the threshold."""


class BoundValidityError(ScanStatError):
    """An error-factor denominator is nonpositive: the bound does not apply
    for this combination of tail level and free parameter."""


class TheoremInapplicableError(ScanStatError):
    """The base probabilities fall outside the validity region (q1 >= 1 - alpha >= 0.9)
    of the extrapolation bound."""


class UnreachableSignificanceError(ScanStatError):
    """No threshold within the window support attains the requested significance."""
