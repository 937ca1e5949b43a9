"""Exception types shared across the package."""


class AccuracyError(RuntimeError):
    """An evaluation policy cannot meet the requested tolerance.

    Raised instead of silently returning a degraded value; carries the
    estimated error actually achieved.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class QuadratureError(RuntimeError):
    """A quadrature loop stopped before reaching its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class GridAlignmentError(ValueError):
    """A scale grid does not satisfy the octave alignment a routine needs."""


class InstabilityError(RuntimeError):
    """Refining a discretization moved a reported aggregate too much."""

    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class VerificationError(AssertionError):
    """A verified inequality failed; carries the offending instance.

    On the discrete model this signals an implementation bug, not a math
    failure, so the instance is attached for reproduction.
    """

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance
