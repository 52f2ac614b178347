"""Exception hierarchy.

Errors fall into three families that the CLI maps onto exit codes:
configuration problems, physics validation failures and numerical failures.
"""


class GaussioError(Exception):
    """Base class for every error raised by this package."""

    category = "error"


class ConfigError(GaussioError, ValueError):
    """A configuration document could not be parsed or is inconsistent."""

    category = "config"


class PhysicsError(GaussioError, ValueError):
    """The described system violates a physical requirement."""

    category = "physics"


class InvariantError(PhysicsError):
    """A model object violates one of its structural invariants."""


class StabilityError(PhysicsError):
    """The drift matrix is not asymptotically stable."""

    def __init__(self, message, max_real_part=None):
        super().__init__(message)
        self.max_real_part = max_real_part


class PhysicalityError(PhysicsError):
    """A covariance matrix or noise matrix violates the uncertainty principle."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class LosslessModeError(PhysicsError):
    """An output was requested from a mode that has no loss channel."""


class NumericalError(GaussioError, ArithmeticError):
    """A linear-algebra step failed or could not be trusted."""

    category = "numerical"


class DimensionError(NumericalError, ValueError):
    """Operand shapes are incompatible."""


class NonFiniteError(NumericalError, ValueError):
    """An operand contains NaN or Inf."""


class SylvesterError(NumericalError):
    """AX + XB = C has no unique solution (A and -B share an eigenvalue)."""

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


class IllConditionedError(NumericalError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class BasisError(GaussioError, ValueError):
    """Objects expressed in different bases were combined."""

    category = "numerical"
