"""Exception hierarchy shared by every module."""


class NonsubmaxError(Exception):
    """Base class for all library errors."""


class InvalidElementError(NonsubmaxError, ValueError):
    """A subset mentions an item outside the function's domain."""


class MonotonicityError(NonsubmaxError, ValueError):
    """A marginal return came out clearly negative."""


class UnsupportedStructureError(NonsubmaxError, ValueError):
    """The instance does not have the structure a solver requires."""


class SizeLimitError(NonsubmaxError, ValueError):
    """The ground set is too large for an exhaustive computation."""


class ConditioningError(NonsubmaxError, ArithmeticError):
    """A covariance or information matrix lost positive definiteness."""


class MissingReferenceError(NonsubmaxError, ValueError):
    """Exact greedy choice ratios need an optimal reference set."""


class DegenerateBudgetError(NonsubmaxError, ValueError):
    """Guarantee formulas divide by the budget total, which is zero."""


class PreconditionError(NonsubmaxError, ValueError):
    """A documented precondition of the operation does not hold."""


class InvalidSequenceError(NonsubmaxError, ValueError):
    """A latency sequence lists an element twice."""


class InstanceFormatError(NonsubmaxError, ValueError):
    """An instance file does not follow the documented JSON schema."""


class CSVParseError(NonsubmaxError, ValueError):
    """A results CSV is malformed; ``line`` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
