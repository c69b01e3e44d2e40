"""Exception and warning types raised by mg1cr.

Each error class carries a short ``kind`` tag that the command line uses as
the machine-parseable prefix of its one-line failure message, and an exit
code.
"""


class MG1Error(Exception):
    """Base class for all mg1cr errors."""

    kind = "error"
    exit_code = 1


class InvalidArgumentError(MG1Error, ValueError):
    kind = "invalid-argument"
    exit_code = 2


class ParseError(MG1Error, ValueError):
    """Malformed model file. ``line`` and ``column`` are 1-based when known."""

    kind = "parse-error"
    exit_code = 2

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(MG1Error, ValueError):
    kind = "validation-error"
    exit_code = 2


class NoConvergenceError(MG1Error, RuntimeError):
    """An iteration hit its cap. ``history`` holds the per-iteration metric."""

    kind = "no-convergence"
    exit_code = 3

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class NumericalBreakdownError(MG1Error, ArithmeticError):
    kind = "numerical-breakdown"
    exit_code = 4


class SingularMatrixError(NumericalBreakdownError):
    kind = "singular-matrix"


class SingularSymbolError(NumericalBreakdownError):
    kind = "singular-symbol"


class DegenerateBoundaryError(NumericalBreakdownError):
    kind = "degenerate-boundary"


class PreconditionError(MG1Error, ValueError):
    kind = "precondition-violation"
    exit_code = 5


class TruncationWarning(UserWarning):
    """Level recursion stopped at ``k_max`` with tail mass above tolerance."""
