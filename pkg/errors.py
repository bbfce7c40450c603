# Error types shared by the library modules and the command-line front end


class AbelfnError(Exception):
    """Base class for every error raised by the library"""


# Linear algebra

class NotSymmetric(AbelfnError, ValueError):
    pass


class NotPositiveDefinite(AbelfnError, ValueError):
    pass


class DimensionMismatch(AbelfnError, ValueError):
    pass


class NoSolution(AbelfnError, ValueError):
    pass


class IntegerOverflow(AbelfnError, OverflowError):
    pass


# Lattice enumeration

class CapacityExceeded(AbelfnError, RuntimeError):
    pass


class InvalidCoset(AbelfnError, ValueError):
    pass


# Abelian restriction

class CompatibilityViolation(AbelfnError, ValueError):
    """An embedding fails one of the compatibility conditions

    Attributes:
        condition (str): Name of the failed condition
    """

    def __init__(self, condition, detail=""):
        self.condition = condition
        message = condition if not detail else f"{condition}: {detail}"
        super().__init__(message)


class DegenerateSeed(AbelfnError, RuntimeError):
    pass


# Integrable systems

class InvalidFlowData(AbelfnError, ValueError):
    pass


class NearThetaZero(AbelfnError, ArithmeticError):
    pass


class DenominatorNearZero(AbelfnError, ArithmeticError):
    pass


class MuZero(AbelfnError, ValueError):
    pass


class InvalidState(AbelfnError, ValueError):
    pass


class PositivityLost(AbelfnError, RuntimeError):
    pass


class TrajectoryBlowUp(AbelfnError, RuntimeError):
    pass


class FitResidualTooLarge(AbelfnError, ArithmeticError):
    pass


class DegenerateDiscriminant(UserWarning):
    """Emitted, not raised, when the spectral curve has colliding branch points"""
