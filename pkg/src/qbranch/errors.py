"""Exception hierarchy.

Every physics-domain failure derives from :class:`QBranchError`; the CLI maps
these to exit status 1 and everything else to a crash.
"""


class QBranchError(Exception):
    """Base class for all domain errors raised by the package."""


class InvalidGridError(QBranchError, ValueError):
    pass


class GridMismatchError(QBranchError, ValueError):
    pass


class OutOfRegimeError(QBranchError, ValueError):
    """Parameters outside the sub-barrier / bound / unbound regime of an operation."""


class InvalidGeometryError(QBranchError, ValueError):
    pass


class ThickBarrierOverflowError(QBranchError, OverflowError):
    """Barrier too opaque for the linear matching solve; use the log-domain path."""


class DegenerateInputError(QBranchError, ValueError):
    pass


class DomainError(QBranchError, ValueError):
    pass


class PrecisionFailureError(QBranchError, ArithmeticError):
    """A special-function evaluation failed to reach its accuracy target.

    Attributes
    ----------
    achieved_digits : float
        Estimated number of correct significant digits (0 if unknown).
    """

    def __init__(self, message, achieved_digits=0.0):
        super().__init__(message)
        self.achieved_digits = float(achieved_digits)


class NonphysicalAbsorptionError(QBranchError, ValueError):
    pass


class CausticError(QBranchError, ValueError):
    pass


class UnsupportedInitialStateError(QBranchError, ValueError):
    pass


class ClosureError(QBranchError, ValueError):
    pass


class IllDefinedGeodesicError(QBranchError, ValueError):
    pass


class InconsistentBranchError(QBranchError, ValueError):
    pass


class DegenerateBranchError(QBranchError, ValueError):
    pass


class IllPosedError(QBranchError, ValueError):
    pass


class ReducedAccuracyWarning(UserWarning):
    """Emitted when an oracle integration cannot certify its usual accuracy."""
