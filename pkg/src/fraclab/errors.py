"""Exception types raised across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class AlignmentError(ValueError):
    """A set is not a union of whole grid cells."""


class GeometryError(ValueError):
    """Transition layers overlap, leave the domain, or miss the grid."""


class ResolutionError(ValueError):
    """The grid is too coarse to resolve a transition layer."""


class RangeError(ValueError):
    """Evaluation outside the sampled range of a tabulated potential."""


class UnsupportedOperation(TypeError):
    """The operation is not available for this object."""


class OptimizationFailure(RuntimeError):
    """Line search exhausted without descent; carries the last iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
