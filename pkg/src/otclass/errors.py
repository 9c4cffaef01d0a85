"""Exception hierarchy shared by every module of the package."""


class OTError(Exception):
    """Base class for all errors raised by otclass."""


class DimensionMismatch(OTError, ValueError):
    pass


class NegativeWeight(OTError, ValueError):
    pass


class MassNotOne(OTError, ValueError):
    pass


class ModeMismatch(OTError, ValueError):
    """Raised when float-mode and rational-mode values are combined."""


class IncompleteAssignment(OTError, ValueError):
    pass


class IndexOutOfRange(OTError, IndexError):
    pass


class Infeasible(OTError):
    pass


class Unbounded(OTError):
    pass


class NumericalFailure(OTError):
    """Pivot breakdown or iteration cap reached inside a simplex solver."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class SizeLimitExceeded(OTError, ValueError):
    pass


class SupportMismatch(OTError, ValueError):
    pass


class NonDifferentiableCost(OTError, TypeError):
    pass


class BaseMismatch(OTError, ValueError):
    pass


class SourceMismatch(OTError, ValueError):
    pass


class UnsupportedCostVariant(OTError, TypeError):
    pass


class BudgetExceeded(OTError):
    pass
