"""Exception hierarchy shared across the package."""


class ParameterError(ValueError):
    """An argument lies outside the admissible parameter set."""


class DegenerateInputError(ParameterError):
    """Input data is structurally degenerate (zero marginal, rank deficiency)."""


class UnsupportedQuantileError(ParameterError):
    """The requested operation is only defined for the median (r = 1/2)."""


class NumericError(ArithmeticError):
    """A matrix factorization or solve failed."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConsistencyError(ValueError):
    """Two inputs that must agree (e.g. a kernel and its stationary law) do not."""


class ReversibilityError(ConsistencyError):
    """A kernel is not reversible with respect to its weight vector."""


class PositivityError(ArithmeticError):
    """A kernel that must be a positive operator has a negative eigenvalue."""


class ProprietyError(ArithmeticError):
    """The unnormalized posterior does not appear integrable."""


class FileFormatError(ValueError):
    """A structured input file is malformed; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line
